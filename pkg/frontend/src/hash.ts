import { bytesToHex } from "./hex.js";

export async function sha256Hex(data: Uint8Array): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", data as BufferSource);
  return bytesToHex(new Uint8Array(digest));
}

/** Content id matching the service: "cid:" + SHA-256 hex of the bytes. */
export async function cidOf(data: Uint8Array): Promise<string> {
  return "cid:" + (await sha256Hex(data));
}

export function isCid(text: string): boolean {
  return /^cid:[0-9a-f]{64}$/.test(text);
}
