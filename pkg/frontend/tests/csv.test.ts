import { describe, expect, it } from "vitest";

import { column, groupBy, numericColumn, parseCsv, requireColumns } from "../src/csv.js";

describe("parseCsv", () => {
  it("parses a plain table", () => {
    const t = parseCsv("a,b\n1,2\n3,4\n");
    expect(t.columns).toEqual(["a", "b"]);
    expect(t.rows).toEqual([
      ["1", "2"],
      ["3", "4"],
    ]);
  });

  it("handles quoted fields with commas, quotes and newlines", () => {
    const t = parseCsv('name,note\n"x,y","he said ""hi""\nsecond line"\n');
    expect(t.rows[0][0]).toBe("x,y");
    expect(t.rows[0][1]).toBe('he said "hi"\nsecond line');
  });

  it("accepts CRLF line endings", () => {
    const t = parseCsv("a,b\r\n1,2\r\n");
    expect(t.rows).toEqual([["1", "2"]]);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1\n")).toThrow(/ragged/);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("")).toThrow(/empty/);
  });
});

describe("column access", () => {
  const t = parseCsv("n,v,tag\n2,0.5,x\n4,0.25,x\n8,0.125,y\n");

  it("fails loudly on missing columns", () => {
    expect(() => requireColumns(t, ["n", "missing"])).toThrow(/missing column/);
    expect(() => column(t, "nope")).toThrow(/missing column/);
  });

  it("parses numeric columns strictly", () => {
    expect(numericColumn(t, "v")).toEqual([0.5, 0.25, 0.125]);
    expect(() => numericColumn(t, "tag")).toThrow(/non-numeric/);
  });

  it("groups rows by key", () => {
    const g = groupBy(t, "tag");
    expect([...g.keys()]).toEqual(["x", "y"]);
    expect(g.get("x")!.rows).toHaveLength(2);
  });
});
