/** Debounced latest-wins preview scheduling.
 *
 * Curve edits arrive faster than the service can render, so the loop
 * keeps at most one request in flight: edits within the debounce
 * window collapse into one call, a newer edit aborts the in-flight
 * request, and stale responses are dropped by generation number.
 */

export interface PreviewTransport {
  (specText: string, signal: AbortSignal): Promise<Blob>;
}

export interface PreviewLoopOptions {
  debounceMs?: number;
  onPreview: (image: Blob, specText: string) => void;
  onError?: (err: unknown) => void;
}

export class PreviewLoop {
  private readonly transport: PreviewTransport;
  private readonly debounceMs: number;
  private readonly onPreview: (image: Blob, specText: string) => void;
  private readonly onError: (err: unknown) => void;

  private timer: ReturnType<typeof setTimeout> | null = null;
  private pendingSpec: string | null = null;
  private generation = 0;
  private inFlight: AbortController | null = null;

  constructor(transport: PreviewTransport, options: PreviewLoopOptions) {
    this.transport = transport;
    this.debounceMs = options.debounceMs ?? 150;
    this.onPreview = options.onPreview;
    this.onError = options.onError ?? (() => {});
  }

  /** Schedule a preview of this spec, replacing any pending one. */
  edit(specText: string): void {
    this.pendingSpec = specText;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire();
    }, this.debounceMs);
  }

  /** Send the pending spec now instead of waiting out the debounce. */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.fire();
  }

  /** Cancel pending and in-flight work (teardown). */
  dispose(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pendingSpec = null;
    this.generation += 1;
    if (this.inFlight !== null) {
      this.inFlight.abort();
      this.inFlight = null;
    }
  }

  private fire(): void {
    if (this.pendingSpec === null) {
      return;
    }
    const spec = this.pendingSpec;
    this.pendingSpec = null;
    const gen = ++this.generation;
    if (this.inFlight !== null) {
      this.inFlight.abort();
    }
    const controller = new AbortController();
    this.inFlight = controller;
    this.transport(spec, controller.signal).then(
      (blob) => {
        if (gen !== this.generation) {
          return; // a newer edit superseded this response
        }
        this.inFlight = null;
        this.onPreview(blob, spec);
      },
      (err) => {
        if (gen !== this.generation || controller.signal.aborted) {
          return;
        }
        this.inFlight = null;
        this.onError(err);
      },
    );
  }
}
