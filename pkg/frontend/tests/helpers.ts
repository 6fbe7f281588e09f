/** Synthetic cohort fixtures in the on-disk record/plan schemas. */
import * as fs from "fs";
import * as path from "path";

import { BIOMARKER_NAMES } from "../src/cohort";
import { mulberry32, Rng } from "../src/rng";

export interface CohortOptions {
  n: number;
  k: number;
  seed: number;
  cropSize?: number;
  constantTargets?: number;   // force every biomarker to this value
  identicalViews?: boolean;   // same crop for axial/coronal/sagittal
}

function makeView(label: number, size: number, rng: Rng): number[][] {
  const view: number[][] = [];
  const half = size / 2;
  const radius2 = label === 1 ? (half * 0.6) ** 2 : (half * 0.35) ** 2;
  for (let r = 0; r < size; r++) {
    const row: number[] = [];
    for (let c = 0; c < size; c++) {
      const d2 = (r - half) ** 2 + (c - half) ** 2;
      const base = d2 < radius2 ? 300 : -900;
      row.push(base + 80 * (rng() - 0.5));
    }
    view.push(row);
  }
  return view;
}

/**
 * Write n record files plus fold_plan.json under dir. Labels alternate, and
 * folds interleave within each class so every fold sees both classes.
 */
export function makeCohort(dir: string, opts: CohortOptions): string[] {
  fs.rmSync(dir, { recursive: true, force: true });
  fs.mkdirSync(dir, { recursive: true });
  const rng = mulberry32(opts.seed);
  const size = opts.cropSize ?? 32;
  const assignment: Record<string, number> = {};
  const ids: string[] = [];
  for (let i = 0; i < opts.n; i++) {
    const id = `syn-${String(i).padStart(4, "0")}`;
    const label = i % 2;
    const views: Record<string, number[][]> = {};
    const first = makeView(label, size, rng);
    for (const name of ["axial", "coronal", "sagittal"]) {
      views[name] = opts.identicalViews ? first : makeView(label, size, rng);
    }
    const biomarkers: Record<string, number> = {};
    for (const name of BIOMARKER_NAMES) {
      if (opts.constantTargets !== undefined) {
        biomarkers[name] = opts.constantTargets;
      } else if (name === "diameter") {
        biomarkers[name] = label === 1 ? 18 + 4 * rng() : 8 + 3 * rng();
      } else {
        biomarkers[name] = label === 1 ? 4 + rng() : 1.5 + rng();
      }
    }
    const record = {
      nodule_id: id,
      label,
      malignancy_median: label === 1 ? 4.5 : 1.5,
      biomarkers,
      center: [size / 2, size / 2, size / 2],
      volume: `${id}.cvol.json`,
      mask: `${id}.cmask.json`,
      views,
    };
    fs.writeFileSync(path.join(dir, `${id}.record.json`),
                     JSON.stringify(record));
    assignment[id] = Math.floor(i / 2) % opts.k;
    ids.push(id);
  }
  fs.writeFileSync(path.join(dir, "fold_plan.json"), JSON.stringify({
    k: opts.k,
    seed: opts.seed,
    stratified: true,
    assignment,
  }));
  return ids;
}
