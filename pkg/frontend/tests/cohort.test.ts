import * as fs from "fs";
import * as path from "path";
import { beforeAll, describe, expect, it } from "vitest";

import {
  BIOMARKER_NAMES, MissingFoldPlanError, checkPlanCoversCohort,
  loadCohort, loadFoldPlan,
} from "../src/cohort";
import { readFeatureCsv, writeFeatureCsv } from "../src/csv";
import { makeCohort } from "./helpers";

const BASE = path.join(__dirname, ".scratch", "cohort");

describe("loadCohort", () => {
  const dir = path.join(BASE, "ok");

  beforeAll(() => {
    makeCohort(dir, { n: 4, k: 2, seed: 11 });
  });

  it("loads records sorted by id with biomarkers in canonical order", () => {
    const records = loadCohort(dir);
    expect(records.map((r) => r.noduleId)).toEqual(
      ["syn-0000", "syn-0001", "syn-0002", "syn-0003"]);
    expect(records[0].biomarkers).toHaveLength(BIOMARKER_NAMES.length);
    expect(records[1].label).toBe(1);
    expect(records[0].views.axial).toHaveLength(32);
  });

  it("rejects an empty directory", () => {
    const empty = path.join(BASE, "empty");
    fs.mkdirSync(empty, { recursive: true });
    expect(() => loadCohort(empty)).toThrow(/no \*\.record\.json/);
  });

  it("rejects a record with a missing biomarker", () => {
    const bad = path.join(BASE, "missing-bio");
    makeCohort(bad, { n: 2, k: 2, seed: 1 });
    const file = path.join(bad, "syn-0000.record.json");
    const record = JSON.parse(fs.readFileSync(file, "utf-8"));
    delete record.biomarkers.margin;
    fs.writeFileSync(file, JSON.stringify(record));
    expect(() => loadCohort(bad)).toThrow(/missing biomarker margin/);
  });

  it("rejects a non-square view", () => {
    const bad = path.join(BASE, "ragged");
    makeCohort(bad, { n: 2, k: 2, seed: 2 });
    const file = path.join(bad, "syn-0001.record.json");
    const record = JSON.parse(fs.readFileSync(file, "utf-8"));
    record.views.coronal[3].push(0);
    fs.writeFileSync(file, JSON.stringify(record));
    expect(() => loadCohort(bad)).toThrow(/not a square grid/);
  });

  it("rejects a label outside {0, 1}", () => {
    const bad = path.join(BASE, "label");
    makeCohort(bad, { n: 2, k: 2, seed: 3 });
    const file = path.join(bad, "syn-0000.record.json");
    const record = JSON.parse(fs.readFileSync(file, "utf-8"));
    record.label = 2;
    fs.writeFileSync(file, JSON.stringify(record));
    expect(() => loadCohort(bad)).toThrow(/label must be 0 or 1/);
  });
});

describe("loadFoldPlan", () => {
  const dir = path.join(BASE, "plan");

  beforeAll(() => {
    makeCohort(dir, { n: 4, k: 2, seed: 5 });
  });

  it("round-trips the exported plan", () => {
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    expect(plan.k).toBe(2);
    expect(plan.stratified).toBe(true);
    expect(Object.keys(plan.assignment)).toHaveLength(4);
  });

  it("refuses to run when the plan file is missing", () => {
    expect(() => loadFoldPlan(path.join(dir, "nope.json")))
      .toThrow(MissingFoldPlanError);
    expect(() => loadFoldPlan(path.join(dir, "nope.json")))
      .toThrow(/refusing to run/);
  });

  it("rejects a fold index outside [0, k)", () => {
    const file = path.join(dir, "bad_plan.json");
    const plan = JSON.parse(
      fs.readFileSync(path.join(dir, "fold_plan.json"), "utf-8"));
    plan.assignment["syn-0000"] = 9;
    fs.writeFileSync(file, JSON.stringify(plan));
    expect(() => loadFoldPlan(file)).toThrow(/out of range/);
  });

  it("requires the plan and cohort to cover the same ids", () => {
    const records = loadCohort(dir);
    const plan = loadFoldPlan(path.join(dir, "fold_plan.json"));
    const dropped = { ...plan, assignment: { ...plan.assignment } };
    delete dropped.assignment["syn-0002"];
    expect(() => checkPlanCoversCohort(records, dropped))
      .toThrow(/misses ids: syn-0002/);
    const extra = { ...plan, assignment: { ...plan.assignment, ghost: 0 } };
    expect(() => checkPlanCoversCohort(records, extra))
      .toThrow(/unknown ids: ghost/);
  });
});

describe("feature csv", () => {
  it("round-trips ids, columns, and values", () => {
    const dir = path.join(BASE, "csv");
    fs.mkdirSync(dir, { recursive: true });
    const file = path.join(dir, "t.csv");
    writeFeatureCsv(file, ["a", "b"], ["n-1", "n-2"],
                    [[1.25, -3.5e-7], [0.1, 2]]);
    const back = readFeatureCsv(file);
    expect(back.columns).toEqual(["a", "b"]);
    expect(back.ids).toEqual(["n-1", "n-2"]);
    expect(back.rows[0][0]).toBe(1.25);
    expect(back.rows[0][1]).toBe(-3.5e-7);
    expect(fs.readFileSync(file, "utf-8").split("\n")[0])
      .toBe("nodule_id,a,b");
  });

  it("quotes ids containing commas", () => {
    const dir = path.join(BASE, "csv");
    fs.mkdirSync(dir, { recursive: true });
    const file = path.join(dir, "q.csv");
    writeFeatureCsv(file, ["a"], ['odd,"id"'], [[1]]);
    const back = readFeatureCsv(file);
    expect(back.ids).toEqual(['odd,"id"']);
  });

  it("rejects a width mismatch", () => {
    const dir = path.join(BASE, "csv");
    fs.mkdirSync(dir, { recursive: true });
    expect(() => writeFeatureCsv(path.join(dir, "w.csv"), ["a"], ["x"],
                                 [[1, 2]])).toThrow(/cells/);
  });
});
