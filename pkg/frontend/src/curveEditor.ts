/** Canvas curve editor: one draggable handle per band plus a square
 * mean-weight handle on the left.  Geometry is kept in pure functions
 * so hit-testing and value mapping can be tested without a DOM.
 */

export interface EditorLayout {
  width: number;
  height: number;
  padding: number;
  /** number of band handles (the mean handle is extra, at slot 0) */
  n: number;
  vmin: number;
  vmax: number;
}

/** x pixel of handle slot i; slot 0 is the mean handle, 1..n are bands. */
export function handleX(layout: EditorLayout, slot: number): number {
  const usable = layout.width - 2 * layout.padding;
  return layout.padding + (usable * slot) / layout.n;
}

export function valueToY(layout: EditorLayout, v: number): number {
  const usable = layout.height - 2 * layout.padding;
  const t = (v - layout.vmin) / (layout.vmax - layout.vmin);
  return layout.height - layout.padding - t * usable;
}

/** Inverse of valueToY, clamped to the displayed range. */
export function yToValue(layout: EditorLayout, y: number): number {
  const usable = layout.height - 2 * layout.padding;
  const t = (layout.height - layout.padding - y) / usable;
  const v = layout.vmin + t * (layout.vmax - layout.vmin);
  return Math.min(layout.vmax, Math.max(layout.vmin, v));
}

/** Slot index of the handle within radius of (x, y), or null. */
export function pickHandle(
  layout: EditorLayout,
  x: number,
  y: number,
  weights: number[],
  mean: number,
  radius: number,
): number | null {
  let best: number | null = null;
  let bestDist = radius;
  const values = [mean, ...weights];
  for (let slot = 0; slot < values.length; slot++) {
    const dx = x - handleX(layout, slot);
    const dy = y - valueToY(layout, values[slot]);
    const d = Math.hypot(dx, dy);
    if (d <= bestDist) {
      best = slot;
      bestDist = d;
    }
  }
  return best;
}

/** Display range covering the curve with headroom, at least [0, 1]. */
export function displayRange(weights: number[], mean: number): [number, number] {
  let lo = 0;
  let hi = 1;
  for (const v of [...weights, mean]) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  const pad = 0.15 * (hi - lo);
  return [lo - pad, hi + pad];
}

export interface CurveEditorOptions {
  onChange: (weights: number[], mean: number) => void;
}

export class CurveEditor {
  private readonly canvas: HTMLCanvasElement;
  private readonly onChange: (weights: number[], mean: number) => void;
  private weights: number[] = [];
  private mean = 1;
  private dragging: number | null = null;

  constructor(canvas: HTMLCanvasElement, options: CurveEditorOptions) {
    this.canvas = canvas;
    this.onChange = options.onChange;
    canvas.addEventListener("pointerdown", (e) => this.onDown(e));
    canvas.addEventListener("pointermove", (e) => this.onMove(e));
    canvas.addEventListener("pointerup", (e) => this.onUp(e));
    canvas.addEventListener("pointercancel", () => (this.dragging = null));
  }

  setCurve(weights: number[], mean: number): void {
    this.weights = weights.slice();
    this.mean = mean;
    this.draw();
  }

  private layout(): EditorLayout {
    const [vmin, vmax] = displayRange(this.weights, this.mean);
    return {
      width: this.canvas.width,
      height: this.canvas.height,
      padding: 24,
      n: Math.max(1, this.weights.length),
      vmin,
      vmax,
    };
  }

  private pointer(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) * this.canvas.width) / rect.width,
      ((e.clientY - rect.top) * this.canvas.height) / rect.height,
    ];
  }

  private onDown(e: PointerEvent): void {
    const [x, y] = this.pointer(e);
    this.dragging = pickHandle(this.layout(), x, y, this.weights, this.mean, 14);
    if (this.dragging !== null) {
      this.canvas.setPointerCapture(e.pointerId);
      this.onMove(e);
    }
  }

  private onMove(e: PointerEvent): void {
    if (this.dragging === null) {
      return;
    }
    const [, y] = this.pointer(e);
    const v = yToValue(this.layout(), y);
    if (this.dragging === 0) {
      this.mean = v;
    } else {
      this.weights[this.dragging - 1] = v;
    }
    this.draw();
  }

  private onUp(e: PointerEvent): void {
    if (this.dragging === null) {
      return;
    }
    this.onMove(e);
    this.dragging = null;
    this.canvas.releasePointerCapture(e.pointerId);
    this.onChange(this.weights.slice(), this.mean);
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    const layout = this.layout();
    ctx.clearRect(0, 0, layout.width, layout.height);

    ctx.strokeStyle = "#3a3f4b";
    ctx.lineWidth = 1;
    for (const v of [0, 1]) {
      if (v < layout.vmin || v > layout.vmax) {
        continue;
      }
      const y = valueToY(layout, v);
      ctx.beginPath();
      ctx.moveTo(layout.padding, y);
      ctx.lineTo(layout.width - layout.padding, y);
      ctx.stroke();
      ctx.fillStyle = "#6a7080";
      ctx.font = "10px sans-serif";
      ctx.fillText(String(v), 4, y + 3);
    }

    ctx.strokeStyle = "#7aa2f7";
    ctx.lineWidth = 2;
    ctx.beginPath();
    this.weights.forEach((w, i) => {
      const x = handleX(layout, i + 1);
      const y = valueToY(layout, w);
      if (i === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    });
    ctx.stroke();

    ctx.fillStyle = "#7aa2f7";
    this.weights.forEach((w, i) => {
      ctx.beginPath();
      ctx.arc(handleX(layout, i + 1), valueToY(layout, w), 5, 0, 2 * Math.PI);
      ctx.fill();
    });

    const mx = handleX(layout, 0);
    const my = valueToY(layout, this.mean);
    ctx.fillStyle = "#e0af68";
    ctx.fillRect(mx - 5, my - 5, 10, 10);
    ctx.fillStyle = "#6a7080";
    ctx.font = "10px sans-serif";
    ctx.fillText("mean", mx - 12, layout.height - 6);
  }
}
