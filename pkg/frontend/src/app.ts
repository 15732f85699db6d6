// Application shell: pointer capture on the canvas, brush toolbar, commit
// dialog with speech/typed intent, version-tree navigation, diff and
// slideshow.  All domain numbers shown in the UI come from service
// payloads; this module only routes them.

import { ApiClient } from "./api.js";
import { BrushSettings, type SliderName } from "./brush.js";
import { redraw } from "./canvasView.js";
import { DiffViewModel, SlideshowController } from "./diff.js";
import { captureIntent } from "./speech.js";
import { UiStrokeBuffer } from "./strokeBuffer.js";
import { renderTree, TreeViewModel } from "./tree.js";
import type { StrokeRecordWire, TreeWire } from "./types.js";

export interface AppElements {
  canvas?: HTMLCanvasElement;
  treePanel?: HTMLElement;
  statusLine?: HTMLElement;
  deltaBadge?: HTMLElement;
  clampIndicator?: HTMLElement;
  messageInput?: () => string;
}

export class AppController {
  brush = new BrushSettings();
  buffer: UiStrokeBuffer;
  strokes: StrokeRecordWire[] = [];
  tree: TreeViewModel | null = null;
  selected: string | null = null;
  lastDiff: DiffViewModel | null = null;
  slideshow: SlideshowController | null = null;
  drawing = false;

  constructor(public api: ApiClient, public el: AppElements = {}) {
    this.buffer = new UiStrokeBuffer(this.brush);
  }

  private ctx(): CanvasRenderingContext2D | null {
    return this.el.canvas ? this.el.canvas.getContext("2d") : null;
  }

  private repaint(): void {
    const ctx = this.ctx();
    if (ctx && this.el.canvas) {
      redraw(ctx, this.strokes, this.el.canvas.width, this.el.canvas.height);
    }
  }

  status(text: string): void {
    if (this.el.statusLine) this.el.statusLine.textContent = text;
  }

  // --- drawing --------------------------------------------------------

  penDown(x: number, y: number, pressure: number | null, tMs: number): void {
    this.drawing = true;
    this.buffer.clear();
    this.buffer.add({ x, y, pressure, tMs });
  }

  penMove(x: number, y: number, pressure: number | null, tMs: number): void {
    if (!this.drawing) return;
    this.buffer.add({ x, y, pressure, tMs });
  }

  /** Pen-up: finalize the record, draw it, send it (or queue offline). */
  async penUp(): Promise<StrokeRecordWire | null> {
    if (!this.drawing || this.buffer.size === 0) {
      this.drawing = false;
      return null;
    }
    this.drawing = false;
    const record = this.buffer.toStrokeRecord();
    this.buffer.clear();
    this.strokes.push(record);
    this.repaint();
    const outcome = await this.api.postStroke(record);
    this.status(
      outcome === "sent"
        ? `stroke sent (${this.strokes.length} on canvas)`
        : `offline: ${this.api.outbox.length} stroke(s) queued`,
    );
    return record;
  }

  setSlider(name: SliderName, raw: number): void {
    const result = this.brush.set(name, raw);
    if (this.el.clampIndicator) {
      this.el.clampIndicator.hidden = !result.clamped;
      if (result.clamped) {
        this.el.clampIndicator.textContent = `${name} clamped to ${result.value}`;
      }
    }
  }

  // --- committing -------------------------------------------------------

  async commitTyped(message: string): Promise<string> {
    const response = await this.api.commit(message, "typed");
    await this.refreshTree();
    this.status(`committed ${response.commit_id.slice(0, 12)}`);
    return response.commit_id;
  }

  /** Speech-first commit; silently degrades to the typed text. */
  async commitWithIntent(wantSpeech: boolean): Promise<string> {
    const typed = this.el.messageInput ?? (() => "");
    const intent = await captureIntent(typed, wantSpeech);
    const response = await this.api.commit(intent.message, intent.source);
    await this.refreshTree();
    return response.commit_id;
  }

  // --- tree -----------------------------------------------------------------

  async refreshTree(): Promise<TreeWire> {
    const payload = await this.api.tree();
    this.tree = new TreeViewModel(payload);
    this.tree.selected = this.selected;
    if (this.el.treePanel) {
      renderTree(this.tree, this.el.treePanel, (id) => void this.selectNode(id));
    }
    return payload;
  }

  /** Click a node: checkout, restore the canvas to exactly those strokes. */
  async selectNode(commitId: string): Promise<number> {
    try {
      const response = await this.api.checkout(commitId);
      this.selected = commitId;
      this.strokes = response.strokes;
      this.repaint();
      await this.refreshTree();
      this.status(`checked out ${commitId.slice(0, 12)} (${response.stroke_count} strokes)`);
      return response.stroke_count;
    } catch (error) {
      // stale tree: refetch once and retry
      await this.refreshTree();
      const response = await this.api.checkout(commitId);
      this.selected = commitId;
      this.strokes = response.strokes;
      this.repaint();
      return response.stroke_count;
    }
  }

  // --- diff / slideshow ----------------------------------------------------------

  async openDiff(a: string, b: string): Promise<DiffViewModel> {
    const payload = await this.api.diff(a, b);
    this.lastDiff = new DiffViewModel(a, b, payload);
    if (this.el.deltaBadge) {
      this.el.deltaBadge.textContent = this.lastDiff.deltaBadge();
    }
    return this.lastDiff;
  }

  async openSlideshow(tip: string, intervalMs = 900): Promise<SlideshowController> {
    const payload = await this.api.slideshow(tip);
    this.slideshow = new SlideshowController(
      payload,
      (index) => {
        const frame = payload.frames[index] as unknown as { strokes?: StrokeRecordWire[] };
        if (frame.strokes) {
          this.strokes = frame.strokes;
          this.repaint();
        }
      },
      intervalMs,
    );
    this.slideshow.show(0);
    return this.slideshow;
  }
}

/** Wire the controller to the live page. */
export function boot(doc: Document, baseUrl = "", repoId = "studio"): AppController {
  const canvas = doc.getElementById("sketch-canvas") as HTMLCanvasElement;
  const controller = new AppController(new ApiClient(baseUrl, repoId), {
    canvas,
    treePanel: doc.getElementById("tree-panel") ?? undefined,
    statusLine: doc.getElementById("status-line") ?? undefined,
    deltaBadge: doc.getElementById("delta-badge") ?? undefined,
    clampIndicator: doc.getElementById("clamp-indicator") ?? undefined,
    messageInput: () => (doc.getElementById("commit-message") as HTMLInputElement).value,
  });

  canvas.addEventListener("pointerdown", (e) => {
    canvas.setPointerCapture(e.pointerId);
    controller.penDown(e.offsetX, e.offsetY, e.pressure > 0 ? e.pressure : null, e.timeStamp);
  });
  canvas.addEventListener("pointermove", (e) => {
    controller.penMove(e.offsetX, e.offsetY, e.pressure > 0 ? e.pressure : null, e.timeStamp);
  });
  canvas.addEventListener("pointerup", () => void controller.penUp());
  canvas.addEventListener("pointerleave", () => void controller.penUp());

  doc.getElementById("commit-button")?.addEventListener("click", () => {
    void controller.commitWithIntent(false);
  });
  doc.getElementById("speech-button")?.addEventListener("click", () => {
    void controller.commitWithIntent(true);
  });
  // keyboard shortcut for the commit gesture
  doc.addEventListener("keydown", (e) => {
    if ((e.ctrlKey || e.metaKey) && e.key === "Enter") {
      void controller.commitWithIntent(false);
    }
  });
  for (const name of ["thickness", "thinning", "smoothing", "streamline", "grayscale", "opacity"]) {
    const slider = doc.getElementById(`slider-${name}`) as HTMLInputElement | null;
    slider?.addEventListener("input", () => {
      controller.setSlider(name as SliderName, Number(slider.value));
    });
  }
  window.addEventListener("online", () => void controller.api.flushOutbox());

  void controller.api
    .createRepo()
    .catch(() => undefined) // repo may already exist
    .then(() => controller.refreshTree())
    .catch(() => controller.status("service unreachable"));
  return controller;
}
