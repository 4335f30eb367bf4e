// Application shell: toolbar, SVG canvas, side panel, member palette.
// All data flows through ApiClient; this file only wires events to state
// changes and paints the scene that scene.ts computes.

import { ApiClient, ApiError } from "./api";
import { buildScene, languageColor } from "./scene";
import { CanvasState, zoomAt, panBy } from "./state";
import type { Pattern, PatternLanguage, PatternView } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_RADIUS = 26;

// Relation types every language understands, in addition to its own.
const SHARED_TYPES = ["alternative-to", "implements", "uses"];

const api = new ApiClient("");
const state = new CanvasState();

let currentView: PatternView | null = null;
let currentSeed = 1;
let languages: PatternLanguage[] = [];
let svg: SVGSVGElement;
let viewport: SVGGElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

// -- toasts and error surfaces ------------------------------------------

function toast(message: string, action?: { label: string; run: () => void }): void {
  const host = document.getElementById("toast")!;
  host.textContent = "";
  host.appendChild(el("span", {}, message));
  if (action) {
    const button = el("button", {}, action.label);
    button.addEventListener("click", () => {
      host.classList.remove("visible");
      action.run();
    });
    host.appendChild(button);
  }
  host.classList.add("visible");
  if (!action) {
    setTimeout(() => host.classList.remove("visible"), 5000);
  }
}

function surfaceError(err: unknown, inline?: (message: string) => void): void {
  if (err instanceof ApiError) {
    if (err.isStale) {
      toast("Someone else changed this view. Reload to continue.", {
        label: "Reload view",
        run: () => { void reloadView(); },
      });
      return;
    }
    if (err.isValidation && inline) {
      inline(`${err.code}: ${err.message}`);
      return;
    }
    toast(`${err.code}: ${err.message}`);
    return;
  }
  toast(String(err));
}

// -- rendering ------------------------------------------------------------

function applyTransform(): void {
  const t = state.transform;
  viewport.setAttribute("transform", `translate(${t.x},${t.y}) scale(${t.k})`);
}

function paint(): void {
  const scene = buildScene(state);
  viewport.textContent = "";
  const known = languages.map((l) => l.id);

  for (const edge of scene.edges) {
    const group = svgEl("g", { class: "edge" });
    const line = svgEl("line", {
      x1: String(edge.x1),
      y1: String(edge.y1),
      x2: String(edge.x2),
      y2: String(edge.y2),
      stroke: edge.crossLanguage ? "#7a5ea8" : "#666",
      "stroke-width": "1.6",
    });
    if (edge.dashed) line.setAttribute("stroke-dasharray", "7 5");
    if (edge.arrow) line.setAttribute("marker-end", "url(#arrow)");
    group.appendChild(line);
    const label = svgEl("text", {
      x: String((edge.x1 + edge.x2) / 2),
      y: String((edge.y1 + edge.y2) / 2 - 6),
      class: "edge-label",
    });
    label.textContent = edge.label;
    group.appendChild(label);
    viewport.appendChild(group);
  }

  for (const node of scene.nodes) {
    const group = svgEl("g", {
      class: "node",
      transform: `translate(${node.x},${node.y})`,
      "data-id": node.id,
    });
    const circle = svgEl("circle", {
      r: String(NODE_RADIUS),
      fill: "#fff",
      stroke: languageColor(node.languageId, known),
      "stroke-width": node.selected || node.pending ? "4" : "2",
    });
    if (node.external) circle.setAttribute("stroke-dasharray", "4 3");
    if (node.pending) circle.setAttribute("fill", "#fdf3d8");
    group.appendChild(circle);
    const label = svgEl("text", { y: String(NODE_RADIUS + 14), class: "node-label" });
    label.textContent = node.label;
    group.appendChild(label);
    attachNodeHandlers(group, node.id);
    viewport.appendChild(group);
  }

  const hint = document.getElementById("empty-hint")!;
  hint.style.display = scene.nodes.length === 0 && currentView ? "block" : "none";
  applyTransform();
}

// -- node interaction -------------------------------------------------------

function attachNodeHandlers(group: SVGGElement, nodeId: string): void {
  let dragging = false;
  let moved = false;

  group.addEventListener("mousedown", (ev) => {
    ev.stopPropagation();
    dragging = true;
    moved = false;
    const onMove = (me: MouseEvent) => {
      if (!dragging) return;
      moved = true;
      const point = canvasPoint(me);
      state.moveNode(nodeId, point.x, point.y);
      paint();
    };
    const onUp = () => {
      dragging = false;
      window.removeEventListener("mousemove", onMove);
      window.removeEventListener("mouseup", onUp);
      if (!moved) void nodeClicked(nodeId);
    };
    window.addEventListener("mousemove", onMove);
    window.addEventListener("mouseup", onUp);
  });
}

async function nodeClicked(nodeId: string): Promise<void> {
  if (drawArmed) {
    const attempt = state.completeEdge(nodeId);
    if (attempt.kind === "rejected") {
      toast(attempt.reason);
      paint();
      return;
    }
    if (attempt.kind === "ready") {
      openEdgeForm(attempt.source, attempt.target);
      paint();
      return;
    }
    paint();
    return;
  }
  state.select(nodeId);
  paint();
  try {
    const pattern = await api.getPattern(nodeId);
    showPattern(pattern);
  } catch (err) {
    surfaceError(err);
  }
}

function canvasPoint(ev: MouseEvent): { x: number; y: number } {
  const rect = svg.getBoundingClientRect();
  const t = state.transform;
  return {
    x: (ev.clientX - rect.left - t.x) / t.k,
    y: (ev.clientY - rect.top - t.y) / t.k,
  };
}

// -- side panel ---------------------------------------------------------------

function showPattern(pattern: Pattern): void {
  const panel = document.getElementById("side")!;
  panel.textContent = "";
  panel.appendChild(el("h2", {}, pattern.name));
  panel.appendChild(el("p", { class: "muted" }, pattern.languageId));
  for (const [section, text] of Object.entries(pattern.sections)) {
    panel.appendChild(el("h3", {}, section));
    panel.appendChild(el("p", {}, text));
  }
}

// -- edge drawing -------------------------------------------------------------

let drawArmed = false;

function setDrawArmed(on: boolean): void {
  drawArmed = on;
  if (!on) state.cancelEdge();
  document.getElementById("draw-toggle")!.classList.toggle("active", on);
  document.getElementById("canvas-wrap")!.classList.toggle("drawing", on);
}

function relationTypeChoices(sourceId: string, targetId: string): string[] {
  const wanted = new Set<string>(SHARED_TYPES);
  const involved = new Set([sourceId.split("/")[0], targetId.split("/")[0]]);
  for (const lang of languages) {
    if (involved.has(lang.id)) {
      for (const t of lang.relationTypes) wanted.add(t.name);
    }
  }
  return [...wanted].sort();
}

function openEdgeForm(sourceId: string, targetId: string): void {
  closeEdgeForm();
  const form = el("div", { id: "edge-form" });
  form.appendChild(el("h3", {}, "New relation"));
  form.appendChild(el("p", { class: "muted" }, `${sourceId} → ${targetId}`));

  const typeSelect = el("select");
  for (const name of relationTypeChoices(sourceId, targetId)) {
    typeSelect.appendChild(el("option", { value: name }, name));
  }
  form.appendChild(typeSelect);

  const description = el("input", { placeholder: "description (optional)" });
  form.appendChild(description);

  const problem = el("p", { class: "inline-error" });
  form.appendChild(problem);

  const save = el("button", {}, "Save");
  save.addEventListener("click", () => {
    void (async () => {
      if (!currentView) return;
      try {
        await api.drawRelation(currentView.id, {
          sourcePatternId: sourceId,
          targetPatternId: targetId,
          type: typeSelect.value,
          description: description.value || undefined,
        });
        closeEdgeForm();
        setDrawArmed(false);
        await reloadGraph();
      } catch (err) {
        surfaceError(err, (message) => {
          problem.textContent = message;
        });
      }
    })();
  });
  form.appendChild(save);

  const cancel = el("button", { class: "secondary" }, "Cancel");
  cancel.addEventListener("click", () => closeEdgeForm());
  form.appendChild(cancel);

  document.getElementById("canvas-wrap")!.appendChild(form);
}

function closeEdgeForm(): void {
  document.getElementById("edge-form")?.remove();
}

// -- member palette ------------------------------------------------------------

async function refreshPalette(): Promise<void> {
  const host = document.getElementById("palette")!;
  host.textContent = "";
  if (!currentView) return;
  const members = new Set(currentView.patternRefs);
  for (const lang of languages) {
    const heading = el("h3", {}, lang.name);
    host.appendChild(heading);
    let patterns: Pattern[];
    try {
      patterns = await api.listPatterns(lang.id);
    } catch (err) {
      surfaceError(err);
      continue;
    }
    for (const pattern of patterns) {
      const row = el("div", { class: "palette-row" });
      row.appendChild(el("span", {}, pattern.name));
      const isMember = members.has(pattern.id);
      const button = el("button", {}, isMember ? "remove" : "add");
      button.addEventListener("click", () => {
        void toggleMember(pattern.id, isMember);
      });
      row.appendChild(button);
      host.appendChild(row);
    }
  }
}

async function toggleMember(patternRef: string, isMember: boolean): Promise<void> {
  if (!currentView) return;
  try {
    currentView = isMember
      ? await api.removeMember(currentView.id, patternRef, true)
      : await api.addMember(currentView.id, patternRef);
    await reloadGraph();
    await refreshPalette();
  } catch (err) {
    surfaceError(err);
  }
}

// -- view loading ---------------------------------------------------------------

async function reloadGraph(): Promise<void> {
  if (!currentView) return;
  const wrap = document.getElementById("canvas-wrap")!;
  const payload = await api.getViewGraph(currentView.id, currentSeed);
  state.loadGraph(payload, wrap.clientWidth || 800, wrap.clientHeight || 600);
  paint();
}

async function reloadView(): Promise<void> {
  if (!currentView) return;
  await openView(currentView.id);
}

async function openView(viewId: string): Promise<void> {
  try {
    currentView = await api.getView(viewId);
    document.getElementById("view-title")!.textContent = currentView.name;
    state.select(null);
    state.cancelEdge();
    closeEdgeForm();
    await reloadGraph();
    await refreshPalette();
  } catch (err) {
    surfaceError(err);
  }
}

// -- boot -------------------------------------------------------------------------

function buildCanvas(): void {
  const wrap = document.getElementById("canvas-wrap")!;
  svg = svgEl("svg", { width: "100%", height: "100%" });
  const defs = svgEl("defs");
  const marker = svgEl("marker", {
    id: "arrow",
    viewBox: "0 0 10 10",
    refX: String(10 + NODE_RADIUS / 2),
    refY: "5",
    markerWidth: "7",
    markerHeight: "7",
    orient: "auto-start-reverse",
  });
  marker.appendChild(svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "#666" }));
  defs.appendChild(marker);
  svg.appendChild(defs);
  viewport = svgEl("g");
  svg.appendChild(viewport);
  wrap.appendChild(svg);

  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = svg.getBoundingClientRect();
    const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
    state.transform = zoomAt(
      state.transform,
      factor,
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    );
    applyTransform();
  });

  let panning = false;
  let last = { x: 0, y: 0 };
  svg.addEventListener("mousedown", (ev) => {
    panning = true;
    last = { x: ev.clientX, y: ev.clientY };
  });
  window.addEventListener("mousemove", (ev) => {
    if (!panning) return;
    state.transform = panBy(state.transform, ev.clientX - last.x, ev.clientY - last.y);
    last = { x: ev.clientX, y: ev.clientY };
    applyTransform();
  });
  window.addEventListener("mouseup", () => {
    panning = false;
  });
}

async function boot(): Promise<void> {
  buildCanvas();

  document.getElementById("draw-toggle")!.addEventListener("click", () => {
    setDrawArmed(!drawArmed);
  });
  document.getElementById("relayout")!.addEventListener("click", () => {
    const input = document.getElementById("seed") as HTMLInputElement;
    const seed = parseInt(input.value, 10);
    currentSeed = Number.isFinite(seed) ? seed : 1;
    void reloadGraph().catch(surfaceError);
  });

  let views: PatternView[];
  try {
    [languages, views] = await Promise.all([api.listLanguages(), api.listViews()]);
  } catch (err) {
    surfaceError(err);
    return;
  }

  const picker = document.getElementById("view-picker") as HTMLSelectElement;
  for (const view of views) {
    picker.appendChild(el("option", { value: view.id }, view.name));
  }
  picker.addEventListener("change", () => {
    if (picker.value) void openView(picker.value);
  });
  if (views.length > 0) {
    picker.value = views[0].id;
    await openView(views[0].id);
  } else {
    toast("No views on this server yet.");
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void boot();
});
