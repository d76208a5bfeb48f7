import { describe, expect, it } from "vitest";
import { ServiceClient, ServiceError } from "../src/api.js";

interface Recorded {
  url: string;
  init?: RequestInit;
}

function recordingClient(
  responses: Response[],
): { client: ServiceClient; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const client = new ServiceClient("http://svc:8008/", async (url, init) => {
    calls.push({ url, init });
    return responses.shift() ?? new Response("{}", { status: 200 });
  });
  return { client, calls };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ServiceClient", () => {
  it("normalizes trailing slashes in the base URL", () => {
    const client = new ServiceClient("http://svc:8008///");
    expect(client.bandUrl("abc", 1, 3)).toBe("http://svc:8008/sessions/abc/bands/1/3");
  });

  it("posts multipart session uploads with optional parts", async () => {
    const { client, calls } = recordingClient([
      json(201, { session: "s1", state: "building" }),
    ]);
    const handle = await client.createSession({
      image1: new Blob([new Uint8Array([1])], { type: "image/png" }),
      image2: new Blob([new Uint8Array([2])], { type: "image/png" }),
      masks: [
        { name: "face.png", data: new Blob([new Uint8Array([3])]) },
        { name: "mouth.png", data: new Blob([new Uint8Array([4])]) },
      ],
      variant: "gf",
      bands: 9,
    });
    expect(handle).toEqual({ session: "s1", state: "building" });
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc:8008/sessions");
    expect(calls[0].init?.method).toBe("POST");

    const form = calls[0].init?.body as FormData;
    const names = [...form.keys()];
    expect(names).toEqual(["image1", "image2", "masks", "masks", "variant", "bands"]);
    expect(form.get("variant")).toBe("gf");
    expect(form.get("bands")).toBe("9");
    const maskFiles = form.getAll("masks") as File[];
    expect(maskFiles.map((f) => f.name)).toEqual(["face.png", "mouth.png"]);
    expect(form.has("landmarks1")).toBe(false);
  });

  it("parses session status JSON", async () => {
    const { client } = recordingClient([
      json(200, {
        session: "s1",
        state: "ready",
        bands: 15,
        channels: 3,
        regions: ["face", "background"],
      }),
    ]);
    const status = await client.status("s1");
    expect(status.state).toBe("ready");
    expect(status.bands).toBe(15);
    expect(status.regions).toEqual(["face", "background"]);
  });

  it("surfaces the error body's detail string verbatim", async () => {
    const { client } = recordingClient([
      json(422, { detail: "registration: landmark counts differ" }),
    ]);
    const err = await client.status("s1").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(422);
    expect(err.detail).toBe("registration: landmark counts differ");
    expect(err.message).toBe("registration: landmark counts differ");
  });

  it("falls back to the HTTP status line for non-JSON error bodies", async () => {
    const { client } = recordingClient([
      new Response("boom", { status: 502, statusText: "Bad Gateway" }),
    ]);
    const err = await client.status("s1").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(502);
    expect(err.detail).toBe("502 Bad Gateway");
  });

  it("sends previews as JSON and returns the PNG blob unchanged", async () => {
    const bytes = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 7, 8, 9]);
    const { client, calls } = recordingClient([
      new Response(new Blob([bytes], { type: "image/png" }), { status: 200 }),
    ]);
    const controller = new AbortController();
    const blob = await client.preview("s1", "format=spectv-filter\n", controller.signal);

    expect(calls[0].url).toBe("http://svc:8008/sessions/s1/preview");
    expect(calls[0].init?.method).toBe("POST");
    expect(calls[0].init?.signal).toBe(controller.signal);
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({
      spec: "format=spectv-filter\n",
    });
    expect(new Uint8Array(await blob.arrayBuffer())).toEqual(bytes);
  });

  it("raises ServiceError for preview failures too", async () => {
    const { client } = recordingClient([
      json(409, { detail: "decomposition not ready" }),
    ]);
    const err = await client.preview("s1", "spec").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(409);
    expect(err.detail).toBe("decomposition not ready");
  });
});
