import * as fs from "fs";
import * as path from "path";
import { afterEach, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli";
import { makeCohort } from "./helpers";

const BASE = path.join(__dirname, ".scratch", "cli");

describe("cli", () => {
  afterEach(() => {
    vi.restoreAllMocks();
  });

  it("refuses to run without the fold plan and exits 2", async () => {
    const dir = path.join(BASE, "noplan");
    makeCohort(dir, { n: 4, k: 2, seed: 2 });
    const errors: string[] = [];
    vi.spyOn(console, "error").mockImplementation((msg) => {
      errors.push(String(msg));
    });
    const code = await main([
      "train-cbm", "--cohort", dir,
      "--plan", path.join(dir, "absent_plan.json"),
      "--out", path.join(BASE, "noplan-out"),
    ]);
    expect(code).toBe(2);
    expect(errors.join("\n")).toMatch(/refusing to run/);
  });

  it("rejects an unknown backbone name", async () => {
    const dir = path.join(BASE, "badbackbone");
    makeCohort(dir, { n: 4, k: 2, seed: 3 });
    vi.spyOn(console, "error").mockImplementation(() => {});
    const code = await main([
      "train-cbm", "--cohort", dir,
      "--plan", path.join(dir, "fold_plan.json"),
      "--out", path.join(BASE, "badbackbone-out"),
      "--backbone", "resnet",
    ]);
    expect(code).toBe(2);
  });

  it("runs train-cbm end to end with smoke overrides", async () => {
    const dir = path.join(BASE, "run");
    makeCohort(dir, { n: 8, k: 2, seed: 4, identicalViews: true });
    const out = path.join(BASE, "run-out");
    vi.spyOn(console, "log").mockImplementation(() => {});
    const code = await main([
      "train-cbm", "--cohort", dir,
      "--plan", path.join(dir, "fold_plan.json"),
      "--out", out,
      "--backbone", "smoke", "--epochs", "1", "--input-size", "8",
      "--batch", "8", "--seed", "1",
    ]);
    expect(code).toBe(0);
    expect(fs.existsSync(path.join(out, "predicted_biomarkers.csv"))).toBe(true);
    expect(fs.existsSync(
      path.join(out, "predicted_biomarkers.folds.json"))).toBe(true);
  });
});
