import * as fs from "fs";
import * as path from "path";
import { beforeAll, describe, expect, it } from "vitest";

import { BIOMARKER_NAMES, loadCohort, loadFoldPlan } from "../src/cohort";
import { readFeatureCsv } from "../src/csv";
import { smokeBackbone } from "../src/model";
import {
  CbmResult, defaultTrainSpec, trainCbm, writeCbmOutputs,
} from "../src/train";
import { makeCohort } from "./helpers";

const BASE = path.join(__dirname, ".scratch", "training");

function smokeSpec(overrides = {}) {
  return defaultTrainSpec({
    epochs: 5,
    batch: 8,
    inputSize: 16,
    seed: 1,
    backbone: smokeBackbone(),
    ...overrides,
  });
}

describe("trainCbm on a 16-nodule overfit cohort", () => {
  const dir = path.join(BASE, "overfit");
  let result: CbmResult;
  let ids: string[];

  beforeAll(async () => {
    ids = makeCohort(dir, { n: 16, k: 2, seed: 21, identicalViews: true });
    const records = loadCohort(dir);
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    result = await trainCbm(records, plan, smokeSpec());
  });

  it("drives training MSE down monotonically over the first 5 epochs", () => {
    for (const losses of result.epochLosses) {
      expect(losses).toHaveLength(5);
      for (let e = 1; e < losses.length; e++) {
        expect(losses[e]).toBeLessThan(losses[e - 1]);
      }
    }
  });

  it("predicts every nodule exactly once at raw biomarker scale", () => {
    expect(result.ids).toEqual(ids);
    expect(result.predictions).toHaveLength(ids.length);
    for (const row of result.predictions) {
      expect(row).toHaveLength(BIOMARKER_NAMES.length);
      row.forEach((v) => expect(Number.isFinite(v)).toBe(true));
    }
    const diameterIdx = BIOMARKER_NAMES.indexOf("diameter");
    const meanDiameter = result.predictions
      .reduce((a, row) => a + row[diameterIdx], 0) / ids.length;
    expect(meanDiameter).toBeGreaterThan(6);
  });

  it("emits a predictions CSV joining 1:1 with the cohort ids", () => {
    const out = path.join(BASE, "overfit-out");
    writeCbmOutputs(out, result);
    const csv = readFeatureCsv(path.join(out, "predicted_biomarkers.csv"));
    expect(csv.columns).toEqual([...BIOMARKER_NAMES]);
    expect(csv.ids).toEqual(ids);
    expect(new Set(csv.ids).size).toBe(ids.length);
    csv.rows.forEach((row) =>
      row.forEach((v) => expect(Number.isFinite(v)).toBe(true)));
    const folds = JSON.parse(fs.readFileSync(
      path.join(out, "predicted_biomarkers.folds.json"), "utf-8"));
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    expect(folds).toEqual(plan.assignment);
  });
});

describe("trainCbm degenerate cases", () => {
  it("collapses to a constant-target cohort within 0.1", async () => {
    const dir = path.join(BASE, "constant");
    makeCohort(dir, { n: 8, k: 2, seed: 5, constantTargets: 3.0,
                      identicalViews: true });
    const records = loadCohort(dir);
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    const result = await trainCbm(records, plan, smokeSpec({ epochs: 2 }));
    for (const row of result.predictions) {
      row.forEach((v) => expect(Math.abs(v - 3.0)).toBeLessThan(0.1));
    }
  });

  it("reproduces predictions exactly under the same seed", async () => {
    const dir = path.join(BASE, "repro");
    makeCohort(dir, { n: 8, k: 2, seed: 9 });
    const records = loadCohort(dir);
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    const spec = smokeSpec({ epochs: 2, inputSize: 8 });
    const first = await trainCbm(records, plan, spec);
    const second = await trainCbm(records, plan, spec);
    expect(second.predictions).toEqual(first.predictions);
    expect(second.epochLosses).toEqual(first.epochLosses);
  });
});
