/** Application wiring: session setup, band browser, curve editing and
 * the live preview loop.  All math happens server-side; this file only
 * moves the curve model between widgets and the HTTP client.
 */
import { ServiceClient, ServiceError, SessionStatus } from "./api.js";
import { CurveEditor } from "./curveEditor.js";
import {
  FilterCurveModel,
  cloneModel,
  parse,
  serialize,
  tableKey,
} from "./filterSpec.js";
import { PRESET_NAMES, PresetName, buildPreset } from "./presets.js";
import { PreviewLoop } from "./previewLoop.js";

const POLL_MS = 700;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

class App {
  private readonly client: ServiceClient;
  private readonly editor: CurveEditor;
  private loop: PreviewLoop | null = null;
  private session: SessionStatus | null = null;
  private model: FilterCurveModel | null = null;
  private curImage: 1 | 2 = 1;
  private curRegion = "";
  private curChannel = 0;
  private copied: { weights: number[]; mean: number } | null = null;

  constructor() {
    this.client = new ServiceClient(
      (window.location.origin.startsWith("http") ? window.location.origin : "") || "http://localhost:8008",
    );
    this.editor = new CurveEditor(el<HTMLCanvasElement>("curve-canvas"), {
      onChange: (weights, mean) => this.onCurveEdited(weights, mean),
    });

    el<HTMLButtonElement>("create-session").addEventListener("click", () => {
      void this.createSession();
    });
    el<HTMLButtonElement>("copy-curve").addEventListener("click", () => this.copyCurve());
    el<HTMLButtonElement>("paste-curve").addEventListener("click", () => this.pasteCurve());
    el<HTMLButtonElement>("apply-preset").addEventListener("click", () => this.applyPreset());
    el<HTMLButtonElement>("export-spec").addEventListener("click", () => this.exportSpec());
    el<HTMLInputElement>("import-spec").addEventListener("change", (e) => {
      void this.importSpec(e);
    });

    const presetSelect = el<HTMLSelectElement>("preset-select");
    for (const name of PRESET_NAMES) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      presetSelect.appendChild(opt);
    }

    const hash = window.location.hash.match(/^#s=(.+)$/);
    if (hash) {
      void this.attachSession(hash[1]);
    }
  }

  private banner(text: string | null): void {
    const node = el<HTMLDivElement>("error-banner");
    node.textContent = text ?? "";
    node.hidden = text === null;
  }

  private setStatus(text: string): void {
    el<HTMLDivElement>("session-status").textContent = text;
  }

  private async createSession(): Promise<void> {
    const image1 = el<HTMLInputElement>("image1").files?.[0];
    const image2 = el<HTMLInputElement>("image2").files?.[0];
    if (!image1 || !image2) {
      this.banner("choose both images first");
      return;
    }
    const landmarks1 = el<HTMLInputElement>("landmarks1").files?.[0];
    const landmarks2 = el<HTMLInputElement>("landmarks2").files?.[0];
    const maskFiles = el<HTMLInputElement>("masks").files;
    const masks = Array.from(maskFiles ?? []).map((f) => ({
      name: f.name,
      data: f as Blob,
    }));
    this.banner(null);
    this.setStatus("uploading…");
    try {
      const handle = await this.client.createSession({
        image1,
        image2,
        landmarks1: landmarks1 ?? undefined,
        landmarks2: landmarks2 ?? undefined,
        masks,
        variant: el<HTMLSelectElement>("variant").value,
        bands: Number(el<HTMLInputElement>("bands").value) || undefined,
      });
      window.location.hash = `#s=${handle.session}`;
      await this.attachSession(handle.session);
    } catch (err) {
      this.setStatus("failed");
      this.banner(err instanceof ServiceError ? err.detail : String(err));
    }
  }

  /** Poll an existing session until it is ready, then open the editor. */
  private async attachSession(sessionId: string): Promise<void> {
    this.setStatus("decomposing…");
    for (;;) {
      let status: SessionStatus;
      try {
        status = await this.client.status(sessionId);
      } catch (err) {
        this.setStatus("failed");
        this.banner(err instanceof ServiceError ? err.detail : String(err));
        return;
      }
      if (status.state === "error") {
        this.setStatus("failed");
        // the error string already carries its stage tag
        this.banner(status.error ?? "build failed");
        return;
      }
      if (status.state === "ready") {
        this.session = status;
        this.openEditor();
        return;
      }
      this.setStatus(`decomposing… (${status.stage ?? status.state})`);
      await new Promise((r) => setTimeout(r, POLL_MS));
    }
  }

  private openEditor(): void {
    const s = this.session!;
    this.setStatus(
      `ready: ${s.bands} bands × ${s.channels} channels (${s.colorspace}), regions: ${(s.regions ?? []).join(", ")}`,
    );
    this.banner(null);
    el<HTMLDivElement>("editor-view").hidden = false;

    this.model = buildPreset("identity-1", s.bands!, s.channels!, s.regions ?? []);
    this.curImage = 1;
    this.curRegion = (s.regions ?? [""])[0];
    this.curChannel = 0;

    this.buildBandBrowser();
    this.buildTabs();

    this.loop?.dispose();
    this.loop = new PreviewLoop(
      (spec, signal) => this.client.preview(s.session, spec, signal),
      {
        onPreview: (blob) => this.showPreview(blob),
        onError: (err) => this.previewError(err),
      },
    );
    this.pushModel();
  }

  private buildBandBrowser(): void {
    const s = this.session!;
    for (const image of [1, 2] as const) {
      const strip = el<HTMLDivElement>(`bands-${image}`);
      strip.textContent = "";
      for (let k = 1; k <= (s.bands ?? 0); k++) {
        // band endpoints are 1-based, coarsest first
        const img = document.createElement("img");
        img.src = this.client.bandUrl(s.session, image, k);
        img.title = `image ${image}, band ${k}`;
        img.className = "band-thumb";
        strip.appendChild(img);
      }
    }
  }

  private buildTabs(): void {
    const s = this.session!;
    const regionTabs = el<HTMLDivElement>("region-tabs");
    regionTabs.textContent = "";
    for (const region of s.regions ?? []) {
      const b = document.createElement("button");
      b.textContent = region;
      b.addEventListener("click", () => {
        this.curRegion = region;
        this.refreshTabs();
        this.showCurrentCurve();
      });
      regionTabs.appendChild(b);
    }
    const channelTabs = el<HTMLDivElement>("channel-tabs");
    channelTabs.textContent = "";
    for (let c = 0; c < (s.channels ?? 0); c++) {
      const b = document.createElement("button");
      b.textContent = `ch ${c}`;
      b.addEventListener("click", () => {
        this.curChannel = c;
        this.refreshTabs();
        this.showCurrentCurve();
      });
      channelTabs.appendChild(b);
    }
    const imageTabs = el<HTMLDivElement>("image-tabs");
    imageTabs.textContent = "";
    for (const image of [1, 2] as const) {
      const b = document.createElement("button");
      b.textContent = `image ${image}`;
      b.addEventListener("click", () => {
        this.curImage = image;
        this.refreshTabs();
        this.showCurrentCurve();
      });
      imageTabs.appendChild(b);
    }
    this.refreshTabs();
    this.showCurrentCurve();
  }

  private refreshTabs(): void {
    const mark = (containerId: string, match: (text: string) => boolean) => {
      for (const b of el<HTMLDivElement>(containerId).querySelectorAll("button")) {
        b.classList.toggle("active", match(b.textContent ?? ""));
      }
    };
    mark("region-tabs", (t) => t === this.curRegion);
    mark("channel-tabs", (t) => t === `ch ${this.curChannel}`);
    mark("image-tabs", (t) => t === `image ${this.curImage}`);
  }

  private currentKey(): string {
    return tableKey(this.curImage, this.curRegion);
  }

  /** Current curve; missing image-2 tables read as silent zeros. */
  private currentCurve(): { weights: number[]; mean: number } {
    const m = this.model!;
    const table = m.tables.get(this.currentKey());
    if (!table) {
      return { weights: new Array(m.nBands).fill(0), mean: 1 };
    }
    return {
      weights: table[this.curChannel].slice(),
      mean: m.means.get(this.currentKey())![this.curChannel],
    };
  }

  private showCurrentCurve(): void {
    const { weights, mean } = this.currentCurve();
    this.editor.setCurve(weights, mean);
    el<HTMLDivElement>("curve-label").textContent =
      `image ${this.curImage} · ${this.curRegion} · channel ${this.curChannel}`;
  }

  private onCurveEdited(weights: number[], mean: number): void {
    const m = this.model!;
    const key = this.currentKey();
    if (!m.tables.has(key)) {
      m.tables.set(
        key,
        Array.from({ length: m.channels }, () => new Array(m.nBands).fill(0)),
      );
      m.means.set(key, new Array(m.channels).fill(1));
    }
    m.tables.get(key)![this.curChannel] = weights.slice();
    m.means.get(key)![this.curChannel] = mean;
    this.pushModel();
  }

  private pushModel(): void {
    if (!this.model || !this.loop) {
      return;
    }
    this.loop.edit(serialize(this.model));
  }

  private showPreview(blob: Blob): void {
    const img = el<HTMLImageElement>("preview");
    const url = URL.createObjectURL(blob);
    const old = img.src;
    img.onload = () => {
      if (old.startsWith("blob:")) {
        URL.revokeObjectURL(old);
      }
    };
    img.src = url;
    el<HTMLDivElement>("preview-badge").hidden = true;
  }

  /** Keep the last good preview visible; badge carries the detail. */
  private previewError(err: unknown): void {
    const badge = el<HTMLDivElement>("preview-badge");
    badge.textContent =
      err instanceof ServiceError ? `preview failed: ${err.detail}` : `preview failed: ${err}`;
    badge.hidden = false;
  }

  private copyCurve(): void {
    this.copied = this.currentCurve();
  }

  private pasteCurve(): void {
    if (!this.copied) {
      return;
    }
    this.onCurveEdited(this.copied.weights.slice(), this.copied.mean);
    this.showCurrentCurve();
  }

  private applyPreset(): void {
    const s = this.session!;
    const name = el<HTMLSelectElement>("preset-select").value as PresetName;
    this.model = buildPreset(name, s.bands!, s.channels!, s.regions ?? []);
    this.showCurrentCurve();
    this.pushModel();
  }

  private exportSpec(): void {
    if (!this.model) {
      return;
    }
    const blob = new Blob([serialize(this.model)], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "filters.spec";
    a.click();
    URL.revokeObjectURL(a.href);
  }

  private async importSpec(e: Event): Promise<void> {
    const input = e.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file || !this.model) {
      return;
    }
    try {
      const imported = parse(await file.text());
      const s = this.session!;
      if (imported.nBands !== s.bands || imported.channels !== s.channels) {
        throw new Error(
          `spec is ${imported.nBands} bands × ${imported.channels} channels, ` +
            `session needs ${s.bands} × ${s.channels}`,
        );
      }
      this.model = cloneModel(imported);
      this.banner(null);
      this.showCurrentCurve();
      this.pushModel();
    } catch (err) {
      this.banner(String(err));
    } finally {
      input.value = "";
    }
  }
}

new App();
