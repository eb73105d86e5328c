/** ISO 8601 UTC <-> epoch seconds. The server speaks ISO on the wire;
 * everything numeric in the client is epoch seconds. */

export function isoToEpoch(iso: string): number {
  const ms = Date.parse(iso);
  if (Number.isNaN(ms)) {
    throw new Error(`unparseable timestamp ${JSON.stringify(iso)}`);
  }
  return ms / 1000;
}

export function epochToIso(s: number): string {
  return new Date(s * 1000).toISOString();
}

/** Render a duration like "3m 20s" for badges and tooltips. */
export function formatSpan(seconds: number): string {
  const s = Math.round(Math.abs(seconds));
  if (s < 60) return `${s}s`;
  if (s < 3600) return `${Math.floor(s / 60)}m ${s % 60}s`;
  return `${Math.floor(s / 3600)}h ${Math.floor((s % 3600) / 60)}m`;
}
