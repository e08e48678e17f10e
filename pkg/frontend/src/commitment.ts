/**
 * Client-side verification of the server's commit-then-reveal hashes.
 *
 * The server commits to its move before seeing ours by publishing
 * SHA-256(move_char || nonce_hex_lowercase) and revealing (move, nonce)
 * afterwards.  Everything here recomputes that hash locally with the
 * Web Crypto API; nothing is ever taken on trust from the reveal.
 */

const HASH_RE = /^[0-9a-f]{64}$/;
const NONCE_RE = /^[0-9a-f]{32}$/;

export function isCommitmentHash(text: string): boolean {
  return HASH_RE.test(text);
}

/**
 * Recompute the commitment hash for a revealed (move, nonce) pair.
 * The nonce is the 32-char lowercase hex rendering of 16 bytes, hashed
 * as ASCII text right after the single ASCII move character.
 */
export async function commitmentHash(
  move: 0 | 1,
  nonceHex: string,
): Promise<string> {
  if (!NONCE_RE.test(nonceHex)) {
    throw new Error(`nonce must be 32 lowercase hex chars, got ${JSON.stringify(nonceHex)}`);
  }
  const payload = new TextEncoder().encode(String(move) + nonceHex);
  const digest = await crypto.subtle.digest("SHA-256", payload);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

/** True when the revealed move and nonce re-hash to the prior commitment. */
export async function verifyReveal(
  committed: string,
  move: 0 | 1,
  nonceHex: string,
): Promise<boolean> {
  const recomputed = await commitmentHash(move, nonceHex);
  return recomputed === committed.toLowerCase();
}
