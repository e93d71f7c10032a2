/** Canonical JSON: sorted keys, no insignificant whitespace, raw unicode.
 * Must produce byte-identical output to the service's canonical encoder,
 * since these bytes get hashed and signed. */

export type JsonValue =
  | string
  | number
  | boolean
  | null
  | JsonValue[]
  | { [key: string]: JsonValue };

export function canonicalJson(value: JsonValue): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const parts = keys.map(
    (key) => JSON.stringify(key) + ":" + canonicalJson(value[key] as JsonValue),
  );
  return "{" + parts.join(",") + "}";
}

export function canonicalBytes(value: JsonValue): Uint8Array {
  return new TextEncoder().encode(canonicalJson(value));
}
