// Diff and slideshow view models.  Both display server payloads verbatim;
// the delta badge in particular is the service's number, never recomputed.

import type { DiffWire, SlideshowWire } from "./types.js";

export class DiffViewModel {
  constructor(public a: string, public b: string, public payload: DiffWire) {}

  deltaBadge(): string {
    const d = this.payload.stroke_count_delta;
    return d > 0 ? `+${d}` : String(d);
  }

  summaryLine(): string {
    return (
      `${this.payload.added.length} added, ${this.payload.removed.length} removed ` +
      `(delta ${this.deltaBadge()})`
    );
  }
}

export class SlideshowController {
  index = 0;
  playing = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    public payload: SlideshowWire,
    public onFrame: (index: number) => void,
    public intervalMs = 900,
  ) {}

  get frameCount(): number {
    return this.payload.frames.length;
  }

  show(index: number): void {
    this.index = Math.min(this.frameCount - 1, Math.max(0, index));
    this.onFrame(this.index);
  }

  play(): void {
    if (this.playing || this.frameCount === 0) return;
    this.playing = true;
    this.timer = setInterval(() => {
      if (this.index + 1 >= this.frameCount) {
        this.pause();
        return;
      }
      this.show(this.index + 1);
    }, this.intervalMs);
  }

  pause(): void {
    this.playing = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  scrub(fraction: number): void {
    this.pause();
    this.show(Math.round(fraction * (this.frameCount - 1)));
  }
}
