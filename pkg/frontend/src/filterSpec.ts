/** The editable curve model and its (lossless) filter-spec text form.
 *
 * The text schema is line-based key=value with [filter ...] sections;
 * serialize() is byte-identical to the backend's writer for the same
 * values, so export/import and previews round-trip exactly.
 */
import { parseFloatToken, pyFloatRepr } from "./pyfloat.js";

export const FILTER_FORMAT = "spectv-filter";
export const FORMAT_VERSION = 1;

/** key for one weight table: image is 1 or 2 */
export function tableKey(image: number, region: string): string {
  return `${image}:${region}`;
}

export interface FilterCurveModel {
  nBands: number;
  channels: number;
  regions: string[];
  omega1: number[]; // per-channel mean weight for image 1
  omega2: number[];
  /** tableKey -> [channel][band] weights */
  tables: Map<string, number[][]>;
  /** tableKey -> per-channel mean weight */
  means: Map<string, number[]>;
}

function broadcast(values: number[] | number, channels: number): number[] {
  const arr = typeof values === "number" ? [values] : values;
  if (arr.length === 1) {
    return new Array(channels).fill(arr[0]);
  }
  if (arr.length !== channels) {
    throw new Error(`expected 1 or ${channels} values, got ${arr.length}`);
  }
  return arr.slice();
}

/** Validate and normalize a model (mirrors the backend's constructor). */
export function makeModel(
  nBands: number,
  channels: number,
  regions: string[],
  tables: Map<string, number[][]>,
  means?: Map<string, number[] | number>,
  omega1?: number[] | number,
  omega2?: number[] | number,
): FilterCurveModel {
  if (!Number.isInteger(nBands) || nBands < 1) {
    throw new Error(`bands must be a positive integer, got ${nBands}`);
  }
  if (!Number.isInteger(channels) || channels < 1) {
    throw new Error(`channels must be a positive integer, got ${channels}`);
  }
  if (regions.length === 0 || new Set(regions).size !== regions.length) {
    throw new Error("regions must be non-empty and unique");
  }
  for (const region of regions) {
    // the line format cannot carry these: ',' splits the regions list,
    // whitespace splits section headers, ']' ends them
    if (!region || /[\s,\]]/.test(region)) {
      throw new Error(
        `region name ${JSON.stringify(region)} must not be empty or contain whitespace, ',' or ']'`,
      );
    }
  }
  const normTables = new Map<string, number[][]>();
  const normMeans = new Map<string, number[]>();
  for (const [key, table] of tables) {
    const [imageStr, region] = splitKey(key);
    const image = Number(imageStr);
    if ((image !== 1 && image !== 2) || !regions.includes(region)) {
      throw new Error(`bad filter table key ${key}`);
    }
    if (table.length !== channels || table.some((row) => row.length !== nBands)) {
      throw new Error(`table ${key} must have shape (${channels}, ${nBands})`);
    }
    for (const row of table) {
      for (const v of row) {
        if (!Number.isFinite(v)) {
          throw new Error(`table ${key} has non-finite weights`);
        }
      }
    }
    normTables.set(key, table.map((row) => row.slice()));
    const m = means?.get(key);
    normMeans.set(key, m === undefined ? new Array(channels).fill(1) : broadcast(m, channels));
  }
  for (const region of regions) {
    if (!normTables.has(tableKey(1, region))) {
      throw new Error(`region '${region}' has no image-1 filter`);
    }
  }
  return {
    nBands,
    channels,
    regions: regions.slice(),
    omega1: broadcast(omega1 ?? 1, channels),
    omega2: broadcast(omega2 ?? 0, channels),
    tables: normTables,
    means: normMeans,
  };
}

function splitKey(key: string): [string, string] {
  const i = key.indexOf(":");
  return [key.slice(0, i), key.slice(i + 1)];
}

function fmtFloats(values: number[]): string {
  return values.map(pyFloatRepr).join(",");
}

function parseFloats(text: string): number[] {
  return text.split(",").map(parseFloatToken);
}

export function serialize(model: FilterCurveModel): string {
  const lines = [
    `format=${FILTER_FORMAT}`,
    `version=${FORMAT_VERSION}`,
    `bands=${model.nBands}`,
    `channels=${model.channels}`,
    `regions=${model.regions.join(",")}`,
    `omega1=${fmtFloats(model.omega1)}`,
    `omega2=${fmtFloats(model.omega2)}`,
  ];
  for (const image of [1, 2]) {
    for (const region of model.regions) {
      const key = tableKey(image, region);
      const table = model.tables.get(key);
      if (table === undefined) {
        continue;
      }
      const mean = model.means.get(key)!;
      for (let c = 0; c < model.channels; c++) {
        lines.push(`[filter image=${image} region=${region} channel=${c}]`);
        lines.push(`weights=${fmtFloats(table[c])}`);
        lines.push(`mean=${pyFloatRepr(mean[c])}`);
      }
    }
  }
  return lines.join("\n") + "\n";
}

function parseInteger(text: string, what: string): number {
  if (!/^[+-]?\d+$/.test(text.trim())) {
    throw new Error(`${what} must be an integer, got ${JSON.stringify(text)}`);
  }
  return Number(text.trim());
}

export function parse(text: string): FilterCurveModel {
  const headerLines: string[] = [];
  const sections: Array<Map<string, string>> = [];
  let current: Map<string, string> | null = null;
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (!line || line.startsWith("#")) {
      continue;
    }
    if (line.startsWith("[")) {
      if (!line.endsWith("]")) {
        throw new Error(`malformed section header: ${JSON.stringify(line)}`);
      }
      current = new Map([["_header", line.slice(1, -1)]]);
      sections.push(current);
    } else if (current === null) {
      headerLines.push(line);
    } else {
      const i = line.indexOf("=");
      if (i < 0) {
        throw new Error(`malformed line: ${JSON.stringify(line)}`);
      }
      current.set(line.slice(0, i).trim(), line.slice(i + 1).trim());
    }
  }

  const fields = new Map<string, string>();
  for (const line of headerLines) {
    const i = line.indexOf("=");
    if (i < 0) {
      throw new Error(`malformed line: ${JSON.stringify(line)}`);
    }
    fields.set(line.slice(0, i).trim(), line.slice(i + 1).trim());
  }
  if (fields.get("format") !== FILTER_FORMAT) {
    throw new Error("not a filter spec file");
  }
  if (fields.get("version") !== String(FORMAT_VERSION)) {
    throw new Error(`unsupported filter spec version ${fields.get("version")}`);
  }
  const nBands = parseInteger(fields.get("bands") ?? "", "bands");
  const channels = parseInteger(fields.get("channels") ?? "", "channels");
  const regions = (fields.get("regions") ?? "").split(",").filter((r) => r);
  const omega1 = parseFloats(fields.get("omega1") ?? "1");
  const omega2 = parseFloats(fields.get("omega2") ?? "0");

  const tables = new Map<string, number[][]>();
  const means = new Map<string, number[] | number>();
  for (const sec of sections) {
    const header = sec.get("_header")!;
    if (!header.startsWith("filter")) {
      throw new Error(`unknown section ${JSON.stringify(header)}`);
    }
    const parts = new Map<string, string>();
    for (const tok of header.split(/\s+/).slice(1)) {
      const i = tok.indexOf("=");
      if (i < 0) {
        throw new Error(`malformed section header: ${JSON.stringify(header)}`);
      }
      parts.set(tok.slice(0, i), tok.slice(i + 1));
    }
    const image = parseInteger(parts.get("image") ?? "", "image");
    const region = parts.get("region") ?? "";
    const channel = parseInteger(parts.get("channel") ?? "", "channel");
    if (channel < 0 || channel >= channels) {
      throw new Error(`channel ${channel} outside 0..${channels - 1}`);
    }
    const key = tableKey(image, region);
    if (!tables.has(key)) {
      tables.set(
        key,
        Array.from({ length: channels }, () => new Array(nBands).fill(0)),
      );
      means.set(key, new Array(channels).fill(1));
    }
    const w = parseFloats(sec.get("weights") ?? "");
    if (w.length !== nBands) {
      throw new Error(
        `section ${JSON.stringify(header)} has ${w.length} weights, expected ${nBands}`,
      );
    }
    tables.get(key)![channel] = w;
    (means.get(key) as number[])[channel] = parseFloatToken(sec.get("mean") ?? "1");
  }
  return makeModel(nBands, channels, regions, tables, means, omega1, omega2);
}

/** Deep copy so editors can mutate without sharing state. */
export function cloneModel(model: FilterCurveModel): FilterCurveModel {
  return {
    nBands: model.nBands,
    channels: model.channels,
    regions: model.regions.slice(),
    omega1: model.omega1.slice(),
    omega2: model.omega2.slice(),
    tables: new Map(
      [...model.tables].map(([k, t]) => [k, t.map((row) => row.slice())]),
    ),
    means: new Map([...model.means].map(([k, m]) => [k, m.slice()])),
  };
}

export function modelsEqual(a: FilterCurveModel, b: FilterCurveModel): boolean {
  return serialize(a) === serialize(b);
}
