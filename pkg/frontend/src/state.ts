// Canvas session state: positions, zoom/pan, selection, edge drawing.
//
// Server layout coordinates live in the unit square; the canvas projects
// them into pixels once on load. Drags after that are session-local and
// never persisted; a re-layout round-trips through the server again.

import type { GraphPayload } from "./types";

export const MIN_ZOOM = 0.1;
export const MAX_ZOOM = 10;

export interface Transform {
  k: number;
  x: number;
  y: number;
}

export interface Point {
  x: number;
  y: number;
}

export function clampZoom(k: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, k));
}

/** Zoom about a fixed canvas point so it stays put under the cursor. */
export function zoomAt(t: Transform, factor: number, cx: number, cy: number): Transform {
  const k = clampZoom(t.k * factor);
  const ratio = k / t.k;
  return {
    k,
    x: cx - (cx - t.x) * ratio,
    y: cy - (cy - t.y) * ratio,
  };
}

export function panBy(t: Transform, dx: number, dy: number): Transform {
  return { k: t.k, x: t.x + dx, y: t.y + dy };
}

export type EdgeAttempt =
  | { kind: "armed" }
  | { kind: "ready"; source: string; target: string }
  | { kind: "rejected"; reason: string };

const MARGIN = 48;

export class CanvasState {
  graph: GraphPayload | null = null;
  positions = new Map<string, Point>();
  transform: Transform = { k: 1, x: 0, y: 0 };
  selection: string | null = null;
  pendingSource: string | null = null;
  width = 800;
  height = 600;

  loadGraph(payload: GraphPayload, width: number, height: number): void {
    this.graph = payload;
    this.width = width;
    this.height = height;
    this.positions.clear();
    const layout = payload.layout ? payload.layout.positions : {};
    const spanX = Math.max(1, width - 2 * MARGIN);
    const spanY = Math.max(1, height - 2 * MARGIN);
    let fallback = 0;
    for (const node of payload.nodes) {
      const unit = layout[node.id];
      if (unit) {
        this.positions.set(node.id, {
          x: MARGIN + unit.x * spanX,
          y: MARGIN + unit.y * spanY,
        });
      } else {
        // no server position for this node: walk a diagonal so nothing overlaps
        fallback += 1;
        this.positions.set(node.id, {
          x: MARGIN + ((fallback * 60) % spanX),
          y: MARGIN + ((fallback * 60) % spanY),
        });
      }
    }
    if (this.selection && !this.positions.has(this.selection)) {
      this.selection = null;
    }
    if (this.pendingSource && !this.positions.has(this.pendingSource)) {
      this.pendingSource = null;
    }
  }

  /** Nodes the renderer would have to draw blind. Must stay empty. */
  unplacedNodes(): string[] {
    if (!this.graph) return [];
    return this.graph.nodes.map((n) => n.id).filter((id) => !this.positions.has(id));
  }

  moveNode(id: string, x: number, y: number): void {
    if (this.positions.has(id)) {
      this.positions.set(id, { x, y });
    }
  }

  select(id: string | null): void {
    this.selection = id;
  }

  /** First click of the two-click edge gesture. */
  beginEdge(sourceId: string): EdgeAttempt {
    this.pendingSource = sourceId;
    return { kind: "armed" };
  }

  /** Second click. Self-loops are refused here, before any request. */
  completeEdge(targetId: string): EdgeAttempt {
    const source = this.pendingSource;
    if (source === null) {
      return this.beginEdge(targetId);
    }
    if (source === targetId) {
      this.pendingSource = null;
      return { kind: "rejected", reason: "a pattern cannot relate to itself" };
    }
    this.pendingSource = null;
    return { kind: "ready", source, target: targetId };
  }

  cancelEdge(): void {
    this.pendingSource = null;
  }
}
