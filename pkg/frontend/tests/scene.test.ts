import { describe, expect, it } from "vitest";

import { buildScene, languageColor } from "../src/scene";
import { CanvasState } from "../src/state";
import type { GraphPayload } from "../src/types";

const GRAPH: GraphPayload = {
  scope: { kind: "view", id: "v" },
  nodes: [
    { id: "one/a", label: "A", languageId: "one", external: false, iconRef: null },
    { id: "two/b", label: "B", languageId: "two", external: true, iconRef: null },
  ],
  edges: [
    {
      id: "v~one/a~uses~two/b",
      source: "one/a",
      target: "two/b",
      type: "uses",
      directed: true,
      span: "cross-language",
      ownership: "view-owned",
      description: "",
    },
    {
      id: "one~one/a~see-also~two/b",
      source: "one/a",
      target: "two/b",
      type: "see-also",
      directed: false,
      span: "cross-language",
      ownership: "language-owned",
      description: "",
    },
  ],
  layout: { seed: 1, positions: { "one/a": { x: 0, y: 0 }, "two/b": { x: 1, y: 1 } } },
};

function loadedState(): CanvasState {
  const state = new CanvasState();
  state.loadGraph(GRAPH, 800, 600);
  return state;
}

describe("scene construction", () => {
  it("is empty before a graph is loaded", () => {
    expect(buildScene(new CanvasState())).toEqual({ nodes: [], edges: [] });
  });

  it("view-owned edges are dashed, language-owned are not", () => {
    const scene = buildScene(loadedState());
    const byId = new Map(scene.edges.map((e) => [e.id, e]));
    expect(byId.get("v~one/a~uses~two/b")!.dashed).toBe(true);
    expect(byId.get("one~one/a~see-also~two/b")!.dashed).toBe(false);
  });

  it("directed edges get arrows, undirected do not", () => {
    const scene = buildScene(loadedState());
    const byId = new Map(scene.edges.map((e) => [e.id, e]));
    expect(byId.get("v~one/a~uses~two/b")!.arrow).toBe(true);
    expect(byId.get("one~one/a~see-also~two/b")!.arrow).toBe(false);
  });

  it("edge endpoints come from the node positions", () => {
    const state = loadedState();
    state.moveNode("one/a", 111, 222);
    const scene = buildScene(state);
    for (const edge of scene.edges) {
      expect(edge.x1).toBe(111);
      expect(edge.y1).toBe(222);
    }
  });

  it("marks selection and pending flags on nodes", () => {
    const state = loadedState();
    state.select("one/a");
    state.beginEdge("two/b");
    const scene = buildScene(state);
    const nodes = new Map(scene.nodes.map((n) => [n.id, n]));
    expect(nodes.get("one/a")!.selected).toBe(true);
    expect(nodes.get("one/a")!.pending).toBe(false);
    expect(nodes.get("two/b")!.pending).toBe(true);
    expect(nodes.get("two/b")!.external).toBe(true);
  });

  it("cross-language edges carry their flag through", () => {
    const scene = buildScene(loadedState());
    expect(scene.edges.every((e) => e.crossLanguage)).toBe(true);
  });
});

describe("language colors", () => {
  it("assigns a stable accent per known language", () => {
    const known = ["one", "two", "three"];
    expect(languageColor("one", known)).toBe(languageColor("one", known));
    expect(languageColor("one", known)).not.toBe(languageColor("two", known));
  });

  it("falls back to grey for unknown languages", () => {
    expect(languageColor("mystery", ["one"])).toBe("#9c9c9c");
  });
});
