// Brush settings with the capture tool's slider ranges enforced.

export interface ClampResult {
  value: number;
  clamped: boolean;
}

export const LIMITS = {
  thickness: { min: 0.5, max: 20.0 },
  thinning: { min: -1, max: 1 },
  smoothing: { min: 0, max: 1 },
  streamline: { min: 0, max: 1 },
  grayscale: { min: 0, max: 1 },
  opacity: { min: 0, max: 1 },
} as const;

export type SliderName = keyof typeof LIMITS;

export function clampSlider(name: SliderName, raw: number): ClampResult {
  const { min, max } = LIMITS[name];
  if (Number.isNaN(raw)) return { value: min, clamped: true };
  const value = Math.min(max, Math.max(min, raw));
  return { value, clamped: value !== raw };
}

export class BrushSettings {
  thickness = 2.0;
  thinning = 0.0;
  smoothing = 0.5;
  streamline = 0.5;
  grayscale = 0.8; // 0 white .. 1 black
  opacity = 1.0;
  category = "defining";

  /** Set a slider, clamping to its range; reports whether clamping bit. */
  set(name: SliderName, raw: number): ClampResult {
    const result = clampSlider(name, raw);
    switch (name) {
      case "thickness": this.thickness = result.value; break;
      case "thinning": this.thinning = result.value; break;
      case "smoothing": this.smoothing = result.value; break;
      case "streamline": this.streamline = result.value; break;
      case "grayscale": this.grayscale = result.value; break;
      case "opacity": this.opacity = result.value; break;
    }
    return result;
  }

  /** CSS/hex color from the grayscale tone (1.0 = black). */
  color(): string {
    const tone = Math.max(0, Math.min(255, Math.round(255 * (1 - this.grayscale))));
    const hex = tone.toString(16).padStart(2, "0");
    return `#${hex}${hex}${hex}`;
  }
}
