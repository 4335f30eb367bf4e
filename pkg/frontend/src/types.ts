// Wire shapes, matching the server's JSON exactly.

export interface SectionSpec {
  name: string;
  required: boolean;
}

export interface RelationTypeInfo {
  name: string;
  directed: boolean;
  description?: string;
}

export interface PatternLanguage {
  id: string;
  name: string;
  domainContext: string;
  sectionSchema: SectionSpec[];
  relationTypes: RelationTypeInfo[];
  version: number;
}

export interface Pattern {
  id: string;
  languageId: string;
  name: string;
  sections: Record<string, string>;
  iconRef: string | null;
  version: number;
}

export interface PatternView {
  id: string;
  name: string;
  context: string;
  patternRefs: string[];
  referencedRelationIds: string[];
  version: number;
}

export interface Relation {
  id: string;
  owner: { kind: string; id: string };
  sourcePatternId: string;
  targetPatternId: string;
  type: string;
  directed: boolean;
  description: string;
  version: number;
}

export interface GraphNode {
  id: string;
  label: string;
  languageId: string;
  external: boolean;
  iconRef: string | null;
}

export interface GraphEdge {
  id: string;
  source: string;
  target: string;
  type: string;
  directed: boolean;
  span: string;
  ownership: string;
  description: string;
}

export interface LayoutInfo {
  seed: number;
  positions: Record<string, { x: number; y: number }>;
}

export interface GraphPayload {
  scope: { kind: string; id: string };
  nodes: GraphNode[];
  edges: GraphEdge[];
  layout?: LayoutInfo;
}

export interface ErrorEnvelope {
  error: { code: string; message: string; subject: string | null };
}
