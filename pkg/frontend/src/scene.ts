// Turns canvas state into a flat draw plan. Keeping this a pure function
// of state means the visual rules (dashing, arrows, highlighting) can be
// checked without a DOM.

import type { CanvasState } from "./state";

export interface NodeGlyph {
  id: string;
  x: number;
  y: number;
  label: string;
  languageId: string;
  external: boolean;
  selected: boolean;
  pending: boolean;
}

export interface EdgeGlyph {
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  label: string;
  dashed: boolean;
  arrow: boolean;
  crossLanguage: boolean;
}

export interface Scene {
  nodes: NodeGlyph[];
  edges: EdgeGlyph[];
}

export function buildScene(state: CanvasState): Scene {
  const graph = state.graph;
  if (!graph) {
    return { nodes: [], edges: [] };
  }
  const nodes: NodeGlyph[] = graph.nodes.map((n) => {
    const p = state.positions.get(n.id);
    if (!p) {
      throw new Error(`node ${n.id} has no position`);
    }
    return {
      id: n.id,
      x: p.x,
      y: p.y,
      label: n.label,
      languageId: n.languageId,
      external: n.external,
      selected: state.selection === n.id,
      pending: state.pendingSource === n.id,
    };
  });
  const edges: EdgeGlyph[] = [];
  for (const e of graph.edges) {
    const s = state.positions.get(e.source);
    const t = state.positions.get(e.target);
    if (!s || !t) {
      continue;
    }
    edges.push({
      id: e.id,
      x1: s.x,
      y1: s.y,
      x2: t.x,
      y2: t.y,
      label: e.type,
      dashed: e.ownership === "view-owned",
      arrow: e.directed,
      crossLanguage: e.span === "cross-language",
    });
  }
  return { nodes, edges };
}

// Stable accent per language so mixed-language views read at a glance.
const PALETTE = ["#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1", "#76b7b2"];

export function languageColor(languageId: string, known: string[]): string {
  const index = known.indexOf(languageId);
  if (index < 0) {
    return "#9c9c9c";
  }
  return PALETTE[index % PALETTE.length];
}
