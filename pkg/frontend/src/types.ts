// Wire types mirroring the service's JSON contracts.  The UI never invents
// domain values: everything rendered comes out of these payloads.

export interface BrushParamsWire {
  size: number;
  thinning: number;
  smoothing: number;
  streamline: number;
  simulatePressure: boolean;
}

export interface StrokeRecordWire {
  _id: string;
  username: string;
  category: string;
  stroke_number: number;
  timestamp: string;
  x_coordinates: number[];
  y_coordinates: number[];
  pressure_values: number[];
  thickness_values: number[];
  t_offsets_ms?: number[];
  color: string;
  grayscale_value: number;
  opacity: number;
  stroke_parameters: BrushParamsWire;
  path?: string;
  image_filename?: string;
}

export interface TreeNodeWire {
  id: string;
  parent: string | null;
  message: string;
  timestamp: string;
  branch_hint: string;
  stroke_count: number;
}

export interface TreeWire {
  nodes: TreeNodeWire[];
  edges: { from: string; to: string }[];
  branches: Record<string, string | null>;
  head: { kind: "branch" | "detached"; value: string };
}

export interface CommitResponse {
  commit_id: string;
  head: { kind: string; value: string };
}

export interface CheckoutResponse {
  base: string;
  stroke_ids: string[];
  stroke_count: number;
  strokes: StrokeRecordWire[];
  head: { kind: string; value: string };
}

export interface DiffWire {
  added: string[];
  removed: string[];
  stroke_count_delta: number;
  added_by_category: Record<string, number>;
  removed_by_category: Record<string, number>;
}

export interface SlideshowWire {
  frames: {
    id: string;
    parent: string | null;
    stroke_ids: string[];
    message: string;
    timestamp: string;
  }[];
}

export interface ApiErrorWire {
  status: number;
  code: string;
  message: string;
  field?: string;
}
