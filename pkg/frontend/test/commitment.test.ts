import { describe, expect, it } from "vitest";

import {
  commitmentHash,
  isCommitmentHash,
  verifyReveal,
} from "../src/commitment.js";

// Reference vectors frozen from the server implementation:
// sha256(move_char || nonce_hex_lowercase) over ASCII text.
const NONCE_A = "000102030405060708090a0b0c0d0e0f";
const HASH_1A = "d5609412794946057e1cccfb2cde1fc855e079cddf45587d0034f3cb64251432";
const HASH_0A = "267474429abed6a0c7e2735db6c2b4d68ee747855bcde55a49f09545069dbf1a";
const NONCE_B = "f00dcafe0123456789abcdef00112233";
const HASH_0B = "f3cfcebed04afb8f503bb9ddc8514075f62339155a4bc62937949eecb737e57d";

describe("commitmentHash", () => {
  it.each([
    [1, NONCE_A, HASH_1A],
    [0, NONCE_A, HASH_0A],
    [0, NONCE_B, HASH_0B],
  ] as Array<[0 | 1, string, string]>)(
    "matches the server for move %d",
    async (move, nonce, expected) => {
      expect(await commitmentHash(move, nonce)).toBe(expected);
    },
  );

  it("depends on the move bit", async () => {
    expect(await commitmentHash(0, NONCE_A)).not.toBe(
      await commitmentHash(1, NONCE_A),
    );
  });

  it.each(["", "00", "0".repeat(31), "0".repeat(33), "X".repeat(32)])(
    "rejects malformed nonce %j",
    async (nonce) => {
      await expect(commitmentHash(1, nonce)).rejects.toThrow(/nonce/);
    },
  );
});

describe("verifyReveal", () => {
  it("accepts a faithful reveal", async () => {
    expect(await verifyReveal(HASH_1A, 1, NONCE_A)).toBe(true);
  });

  it("flags a flipped move", async () => {
    expect(await verifyReveal(HASH_1A, 0, NONCE_A)).toBe(false);
  });

  it("flags a substituted nonce", async () => {
    expect(await verifyReveal(HASH_0A, 0, NONCE_B)).toBe(false);
  });
});

describe("isCommitmentHash", () => {
  it("accepts 64 lowercase hex chars", () => {
    expect(isCommitmentHash(HASH_1A)).toBe(true);
  });

  it.each(["", HASH_1A.slice(1), HASH_1A + "0", HASH_1A.toUpperCase()])(
    "rejects %j",
    (text) => {
      expect(isCommitmentHash(text)).toBe(false);
    },
  );
});
