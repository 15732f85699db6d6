// In-progress stroke capture: pointer samples in, a lossless wire record out.
//
// Smoothing (moving average) and streamline (pull toward the previous
// point) are applied while drawing, before the record exists, and the
// brush parameters are recorded on the stroke so downstream feature
// extraction sees exactly what the canvas drew.

import { BrushSettings } from "./brush.js";
import type { StrokeRecordWire } from "./types.js";

export interface PointSample {
  x: number;
  y: number;
  pressure: number | null; // null when hardware reports none
  tMs: number;             // event timestamp, any monotonic base
}

let strokeCounter = 0;

export function resetStrokeCounter(): void {
  strokeCounter = 0;
}

function isoWithMicroseconds(date: Date): string {
  const pad = (n: number, w: number) => String(n).padStart(w, "0");
  return (
    `${date.getUTCFullYear()}-${pad(date.getUTCMonth() + 1, 2)}-${pad(date.getUTCDate(), 2)}` +
    `T${pad(date.getUTCHours(), 2)}:${pad(date.getUTCMinutes(), 2)}:${pad(date.getUTCSeconds(), 2)}` +
    `.${pad(date.getUTCMilliseconds(), 3)}000`
  );
}

export class UiStrokeBuffer {
  private samples: PointSample[] = [];
  private smoothedX: number[] = [];
  private smoothedY: number[] = [];

  constructor(public brush: BrushSettings, public username = "designer") {}

  get size(): number {
    return this.samples.length;
  }

  add(sample: PointSample): void {
    const { streamline, smoothing } = this.brush;
    let x = sample.x;
    let y = sample.y;
    const n = this.smoothedX.length;
    if (n > 0) {
      // streamline: interpolate toward the previous (already smoothed) point
      x = x + (this.smoothedX[n - 1] - x) * streamline * 0.5;
      y = y + (this.smoothedY[n - 1] - y) * streamline * 0.5;
      // smoothing: blend with the previous point once more
      x = x * (1 - smoothing * 0.3) + this.smoothedX[n - 1] * smoothing * 0.3;
      y = y * (1 - smoothing * 0.3) + this.smoothedY[n - 1] * smoothing * 0.3;
    }
    this.smoothedX.push(x);
    this.smoothedY.push(y);
    this.samples.push(sample);
  }

  /** Points as the canvas drew them (post smoothing/streamline). */
  points(): { x: number; y: number }[] {
    return this.smoothedX.map((x, i) => ({ x, y: this.smoothedY[i] }));
  }

  clear(): void {
    this.samples = [];
    this.smoothedX = [];
    this.smoothedY = [];
  }

  /**
   * Convert to a wire record on pen-up.  Pressure 0.5 is substituted (and
   * flagged via simulatePressure) when the hardware never reported any.
   */
  toStrokeRecord(now: Date = new Date()): StrokeRecordWire {
    if (this.samples.length === 0) {
      throw new Error("empty stroke buffer");
    }
    strokeCounter += 1;
    const hasPressure = this.samples.some((s) => s.pressure !== null && s.pressure > 0);
    const pressures = this.samples.map((s) =>
      hasPressure && s.pressure !== null && s.pressure > 0
        ? Math.min(1, Math.max(0, s.pressure))
        : 0.5,
    );
    const t0 = this.samples[0].tMs;
    let last = 0;
    const offsets = this.samples.map((s) => {
      last = Math.max(last, s.tMs - t0);
      return last;
    });
    offsets[0] = 0;

    return {
      _id: randomHexId(),
      username: this.username,
      category: this.brush.category,
      stroke_number: strokeCounter,
      timestamp: isoWithMicroseconds(now),
      x_coordinates: [...this.smoothedX],
      y_coordinates: [...this.smoothedY],
      pressure_values: pressures,
      thickness_values: this.samples.map(() => this.brush.thickness),
      t_offsets_ms: offsets,
      color: this.brush.color(),
      grayscale_value: this.brush.grayscale,
      opacity: this.brush.opacity,
      stroke_parameters: {
        size: this.brush.thickness,
        thinning: this.brush.thinning,
        smoothing: this.brush.smoothing,
        streamline: this.brush.streamline,
        simulatePressure: !hasPressure,
      },
    };
  }
}

function randomHexId(): string {
  const bytes = new Uint8Array(12);
  if (typeof crypto !== "undefined" && crypto.getRandomValues) {
    crypto.getRandomValues(bytes);
  } else {
    for (let i = 0; i < bytes.length; i++) bytes[i] = Math.floor(Math.random() * 256);
  }
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}
