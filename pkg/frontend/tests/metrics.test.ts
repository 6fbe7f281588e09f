import { describe, expect, it } from "vitest";

import { aucTrapezoid, buildReport, foldMetrics, rocPoints } from "../src/metrics";
import { reportSchema } from "../src/reportSchema";

describe("rocPoints", () => {
  it("bounds the curve with inf thresholds and runs (0,0) to (1,1)", () => {
    const pts = rocPoints([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]);
    expect(pts[0]).toEqual([Infinity, 0, 0]);
    expect(pts[pts.length - 1]).toEqual([-Infinity, 1, 1]);
    expect(aucTrapezoid(pts)).toBe(1);
  });

  it("counts score >= threshold as positive", () => {
    const pts = rocPoints([0.5, 0.5, 0.2, 0.8], [1, 0, 0, 1]);
    const at05 = pts.find(([t]) => t === 0.5)!;
    expect(at05[1]).toBeCloseTo(0.5, 12);
    expect(at05[2]).toBeCloseTo(1.0, 12);
  });

  it("scores a reversed ranking as zero", () => {
    const pts = rocPoints([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]);
    expect(aucTrapezoid(pts)).toBe(0);
  });

  it("rejects a single-class fold", () => {
    expect(() => rocPoints([0.5, 0.6], [1, 1])).toThrow(/both classes/);
  });
});

describe("foldMetrics", () => {
  it("computes the confusion table at threshold 0.5", () => {
    const m = foldMetrics(0, [0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0]);
    expect([m.tp, m.fn, m.fp, m.tn]).toEqual([1, 1, 1, 1]);
    expect(m.accuracy).toBe(0.5);
    expect(m.recall).toBe(0.5);
    expect(m.precision).toBe(0.5);
    expect(m.degenerate).toBe(false);
  });

  it("flags a single-class fold degenerate with null auc and empty roc", () => {
    const m = foldMetrics(2, [0.9, 0.2], [1, 1]);
    expect(m.degenerate).toBe(true);
    expect(m.auc).toBeNull();
    expect(m.roc).toEqual([]);
    expect(m.recall).toBe(0.5);
    expect(m.precision).toBe(1.0);
  });

  it("nulls recall and precision on empty denominators", () => {
    const m = foldMetrics(0, [0.1, 0.2], [0, 0]);
    expect(m.recall).toBeNull();
    expect(m.precision).toBeNull();
  });
});

describe("buildReport", () => {
  it("serializes inf thresholds as strings and skips null means", () => {
    const folds = [
      foldMetrics(0, [0.9, 0.1], [1, 0]),
      foldMetrics(1, [0.8, 0.3], [1, 1]),
    ];
    const report = buildReport("cnn-e2e", "cnn", 7, 2, folds) as any;
    expect(report.folds[0].roc[0][0]).toBe("inf");
    expect(report.folds[0].roc.at(-1)[0]).toBe("-inf");
    expect(report.degenerate_folds).toEqual([1]);
    expect(report.mean_auc).toBe(1);
    expect(report.hyperparameters).toEqual(
      { C: null, l1_lambda: null, gamma: null, n_trees: null });
    expect(() => reportSchema.parse(report)).not.toThrow();
  });
});
