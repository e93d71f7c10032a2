/** Client-side Ed25519 via WebCrypto: the private key is pasted per session
 * as a 32-byte seed in hex and never leaves the browser. */

import { canonicalBytes } from "./canonical.js";
import { bytesToHex, hexToBytes } from "./hex.js";

// PKCS8 wrapper for a raw Ed25519 seed (RFC 8410 structure, fixed prefix)
const PKCS8_PREFIX = "302e020100300506032b657004220420";

export interface SessionKey {
  privateKey: CryptoKey;
  publicHex: string;
}

function base64UrlToBytes(b64url: string): Uint8Array {
  const b64 = b64url.replace(/-/g, "+").replace(/_/g, "/");
  const raw = atob(b64);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

export async function importSessionKey(seedHex: string): Promise<SessionKey> {
  const seed = hexToBytes(seedHex.trim());
  if (seed.length !== 32) {
    throw new Error("private key must be 32 bytes of hex");
  }
  const pkcs8 = hexToBytes(PKCS8_PREFIX + bytesToHex(seed));
  const privateKey = await crypto.subtle.importKey(
    "pkcs8", pkcs8 as BufferSource, { name: "Ed25519" }, true, ["sign"],
  );
  const jwk = await crypto.subtle.exportKey("jwk", privateKey);
  if (!jwk.x) throw new Error("could not derive the public key");
  return { privateKey, publicHex: bytesToHex(base64UrlToBytes(jwk.x)) };
}

export async function signBytes(key: SessionKey, data: Uint8Array): Promise<string> {
  const sig = await crypto.subtle.sign("Ed25519", key.privateKey, data as BufferSource);
  return bytesToHex(new Uint8Array(sig));
}

/** The canonical message an author signs to certify one document version;
 * must match the service byte for byte. */
export function attestationMessage(
  instanceId: string, dataObject: string, version: number, cid: string,
): Uint8Array {
  return canonicalBytes({ cid, dataObject, instanceId, version });
}

export async function signAttestation(
  key: SessionKey, instanceId: string, dataObject: string,
  version: number, cid: string,
): Promise<string> {
  return signBytes(key, attestationMessage(instanceId, dataObject, version, cid));
}

export async function verifySignature(
  publicHex: string, message: Uint8Array, signatureHex: string,
): Promise<boolean> {
  try {
    const publicKey = await crypto.subtle.importKey(
      "raw", hexToBytes(publicHex) as BufferSource, { name: "Ed25519" }, false,
      ["verify"],
    );
    return await crypto.subtle.verify(
      "Ed25519", publicKey, hexToBytes(signatureHex) as BufferSource,
      message as BufferSource,
    );
  } catch {
    return false;
  }
}
