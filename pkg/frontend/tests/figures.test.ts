import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { FIGURES, figureById } from "../src/figures.js";
import { main } from "../src/cli.js";
import { powerLawFit } from "../src/fit.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));

describe("figure registry", () => {
  it("knows every advertised figure", () => {
    const ids = FIGURES.map((f) => f.id);
    expect(ids).toContain("entropy-scatter");
    expect(ids).toContain("kpm-spectra");
    expect(() => figureById("nope")).toThrow(/unknown figure/);
  });
});

describe("rendering from acceptance-run bundles", () => {
  for (const spec of FIGURES) {
    it(`renders ${spec.id} without error`, () => {
      const { svg, sidecar } = spec.render(FIXTURES);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("</svg>");
      expect(sidecar).toBeTypeOf("object");
    });
  }

  it("matches the producer's fit values to 1e-9 (velocity scaling)", () => {
    const meta = JSON.parse(
      readFileSync(join(FIXTURES, "metadata_velocity.json"), "utf8"),
    );
    const { sidecar } = figureById("velocity-scaling").render(FIXTURES);
    const fits = (sidecar as any).fits;
    for (const variant of Object.keys(meta.fits)) {
      expect(Math.abs(fits[variant].exponent - meta.fits[variant].exponent)).toBeLessThan(1e-9);
      expect(Math.abs(fits[variant].prefactor - meta.fits[variant].prefactor)).toBeLessThan(
        1e-9 * Math.abs(meta.fits[variant].prefactor),
      );
    }
  });

  it("matches the producer's fit values to 1e-9 (qsl + catastrophe)", () => {
    const meta = JSON.parse(
      readFileSync(join(FIXTURES, "metadata_qsl.json"), "utf8"),
    );
    const { sidecar } = figureById("qsl-scaling").render(FIXTURES);
    const fits = (sidecar as any).fits;
    for (const variant of Object.keys(meta.fits)) {
      for (const key of ["catastrophe", "v_qsl"]) {
        expect(
          Math.abs(fits[variant][key].exponent - meta.fits[variant][key].exponent),
        ).toBeLessThan(1e-9);
      }
    }
  });

  it("matches the producer's fit values to 1e-9 (susceptibility)", () => {
    const meta = JSON.parse(
      readFileSync(join(FIXTURES, "metadata_susceptibility.json"), "utf8"),
    );
    const { sidecar } = figureById("susceptibility-scaling").render(FIXTURES);
    const fits = (sidecar as any).fits as any;
    expect(
      Math.abs(fits.gamma_eps0.exponent - meta.fits.gamma_eps0.exponent),
    ).toBeLessThan(1e-9);
  });
});

describe("cli", () => {
  it("writes svg and sidecar", () => {
    const out = join(mkdtempSync(join(tmpdir(), "fig-")), "entropy.svg");
    const rc = main(["render", "entropy-scatter", "--in", FIXTURES, "--out", out]);
    expect(rc).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
    const sidecar = JSON.parse(readFileSync(out.replace(".svg", ".json"), "utf8"));
    expect(sidecar.figure).toBe("entropy-scatter");
  });

  it("fails loudly on schema mismatch", () => {
    const dir = mkdtempSync(join(tmpdir(), "bad-"));
    writeFileSync(join(dir, "spectrum.csv"), "wrong,headers\n1,2\n");
    const out = join(dir, "x.svg");
    const rc = main(["render", "entropy-scatter", "--in", dir, "--out", out]);
    expect(rc).toBe(1);
  });

  it("rejects unknown figures and bad flags", () => {
    expect(main(["render", "mystery", "--in", ".", "--out", "x.svg"])).toBe(1);
    expect(main(["render", "entropy-scatter", "--oops", "1"])).toBe(2);
  });
});

describe("sanity of sidecar fit math on synthetic data", () => {
  it("power-law fit round-trips through CSV text formatting", () => {
    const x = [10, 12, 14];
    const y = [1.5e-3, 1.1e-3, 0.9e-3];
    const parsed = y.map((v) => Number(String(v)));
    const a = powerLawFit(x, y);
    const b = powerLawFit(x, parsed);
    expect(a.exponent).toBe(b.exponent);
  });
});
