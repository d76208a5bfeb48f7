/** Built-in filter profiles for the presets menu.
 *
 * Curves are qualitative shapes matching the backend's named profiles:
 * identity presets reproduce one input, face fusion keeps image 1's
 * low frequencies and routes eye/mouth detail to image 2, object
 * insertion swaps high bands inside non-background regions, painting
 * amplifies image 2's fine bands everywhere, mosaic interleaves bands.
 */
import { FilterCurveModel, makeModel, tableKey } from "./filterSpec.js";

export const PRESET_NAMES = [
  "identity-1",
  "identity-2",
  "face-fusion",
  "object-insertion",
  "painting",
  "mosaic",
] as const;

export type PresetName = (typeof PRESET_NAMES)[number];

function ramp(k: number, start: number, stop: number): number[] {
  if (k === 1) {
    return [start];
  }
  return Array.from({ length: k }, (_, i) => start + ((stop - start) * i) / (k - 1));
}

function full(k: number, v: number): number[] {
  return new Array(k).fill(v);
}

/** Expand [luminance, chrominance] curves to one row per channel. */
function perChannel(channels: number, luma: number[], chroma: number[]): number[][] {
  return Array.from({ length: channels }, (_, c) => (c === 0 ? luma : chroma).slice());
}

function uniformModel(
  nBands: number,
  channels: number,
  regions: string[],
  curves1: number[][],
  curves2: number[][],
  omega1: number,
  omega2: number,
): FilterCurveModel {
  const tables = new Map<string, number[][]>();
  for (const region of regions) {
    tables.set(tableKey(1, region), curves1.map((row) => row.slice()));
    tables.set(tableKey(2, region), curves2.map((row) => row.slice()));
  }
  return makeModel(nBands, channels, regions, tables, undefined, omega1, omega2);
}

function isFeatureRegion(name: string): boolean {
  const n = name.toLowerCase();
  return n.includes("eye") || n.includes("mouth");
}

function isBackgroundRegion(name: string): boolean {
  const n = name.toLowerCase();
  return n === "background" || n === "all" || n === "scene";
}

export function buildPreset(
  name: PresetName,
  nBands: number,
  channels: number,
  regions: string[],
): FilterCurveModel {
  const k = nBands;
  const ones = full(k, 1);
  const zeros = full(k, 0);
  const allOnes = Array.from({ length: channels }, () => ones.slice());
  const allZeros = Array.from({ length: channels }, () => zeros.slice());

  switch (name) {
    case "identity-1":
      return uniformModel(k, channels, regions, allOnes, allZeros, 1, 0);
    case "identity-2":
      return uniformModel(k, channels, regions, allZeros, allOnes, 0, 1);
    case "face-fusion": {
      const base1 = perChannel(channels, ramp(k, 1.0, 0.7), full(k, 0.8));
      const base2 = perChannel(channels, ramp(k, 0.0, 0.7), full(k, 0.2));
      const feat1 = perChannel(channels, ramp(k, 0.7, 0.0), full(k, 0.6));
      const feat2 = perChannel(channels, ramp(k, 0.3, 1.0), full(k, 0.4));
      const tables = new Map<string, number[][]>();
      for (const region of regions) {
        const feature = isFeatureRegion(region);
        tables.set(tableKey(1, region), (feature ? feat1 : base1).map((r) => r.slice()));
        tables.set(tableKey(2, region), (feature ? feat2 : base2).map((r) => r.slice()));
      }
      return makeModel(k, channels, regions, tables, undefined, 1, 0);
    }
    case "object-insertion": {
      // low bands from image 1 everywhere; inside every non-background
      // region the remaining bands come from image 2 instead
      const kLo = Math.max(1, Math.floor(k / 3) + 1);
      const lo = Array.from({ length: k }, (_, i) => (i < kLo - 1 ? 1 : 0));
      const hi = lo.map((v) => 1 - v);
      const tables = new Map<string, number[][]>();
      for (const region of regions) {
        const object = !isBackgroundRegion(region);
        tables.set(
          tableKey(1, region),
          Array.from({ length: channels }, () => (object ? lo : ones).slice()),
        );
        tables.set(
          tableKey(2, region),
          Array.from({ length: channels }, () => (object ? hi : zeros).slice()),
        );
      }
      return makeModel(k, channels, regions, tables, undefined, 1, 0);
    }
    case "painting": {
      // content keeps coarse bands, style supplies amplified fine bands
      const split = Math.max(1, Math.floor(k / 2) + 1);
      const lo = Array.from({ length: k }, (_, i) => (i < split - 1 ? 1 : 0));
      const hi = lo.map((v) => 1.8 * (1 - v));
      return uniformModel(
        k,
        channels,
        regions,
        Array.from({ length: channels }, () => lo.slice()),
        Array.from({ length: channels }, () => hi.slice()),
        1,
        0,
      );
    }
    case "mosaic": {
      // alternate bands between the two images
      const even = Array.from({ length: k }, (_, i) => (i % 2 === 0 ? 1 : 0));
      const odd = even.map((v) => 1 - v);
      return uniformModel(
        k,
        channels,
        regions,
        Array.from({ length: channels }, () => even.slice()),
        Array.from({ length: channels }, () => odd.slice()),
        1,
        0,
      );
    }
  }
}
