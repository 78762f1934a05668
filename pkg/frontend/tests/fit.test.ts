import { describe, expect, it } from "vitest";

import { linearFit, powerLawFit } from "../src/fit.js";

describe("linearFit", () => {
  it("recovers an exact line", () => {
    const { slope, intercept, r2 } = linearFit([1, 2, 3, 4], [3, 5, 7, 9]);
    expect(slope).toBeCloseTo(2, 12);
    expect(intercept).toBeCloseTo(1, 12);
    expect(r2).toBeCloseTo(1, 12);
  });

  it("rejects degenerate input", () => {
    expect(() => linearFit([1], [2])).toThrow();
    expect(() => linearFit([2, 2], [1, 3])).toThrow(/degenerate/);
  });
});

describe("powerLawFit", () => {
  it("recovers exact power laws", () => {
    const x = [4, 8, 16, 32];
    const y = x.map((v) => 3 * v ** -0.5);
    const fit = powerLawFit(x, y);
    expect(fit.exponent).toBeCloseTo(-0.5, 12);
    expect(fit.prefactor).toBeCloseTo(3, 12);
    expect(fit.r2).toBeCloseTo(1, 12);
  });

  it("matches the producer-side definition on noisy data", () => {
    // frozen case computed with the simulation package's power_law_fit
    const x = [10, 12, 14, 16];
    const y = [0.0035, 0.0029, 0.00252, 0.00221];
    const fit = powerLawFit(x, y);
    expect(fit.exponent).toBeCloseTo(-0.9726414707402239, 9);
    expect(fit.prefactor).toBeCloseTo(0.032743595210028106, 9);
  });

  it("rejects nonpositive data", () => {
    expect(() => powerLawFit([1, 2], [0, 1])).toThrow(/positive/);
  });
});
