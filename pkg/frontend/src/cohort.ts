/**
 * Readers for the nodule cohort interchange files: per-nodule record JSON
 * (label, averaged biomarkers, three orthogonal view crops) and the fold
 * plan JSON that fixes the cross-validation split.
 */
import * as fs from "fs";
import * as path from "path";
import { z } from "zod";

export const BIOMARKER_NAMES = [
  "subtlety", "calcification", "sphericity", "margin",
  "lobulation", "spiculation", "texture", "diameter",
] as const;

export const VIEW_NAMES = ["axial", "coronal", "sagittal"] as const;

export type ViewName = (typeof VIEW_NAMES)[number];

export interface NoduleRecord {
  noduleId: string;
  label: number;
  biomarkers: number[];              // BIOMARKER_NAMES order
  views: Record<ViewName, number[][]>;
}

export interface FoldPlan {
  k: number;
  seed: number;
  stratified: boolean;
  assignment: Record<string, number>;
}

/** Raised when the fold plan file is absent; training refuses to start. */
export class MissingFoldPlanError extends Error {}

export class CohortFormatError extends Error {}

const viewSchema = z.array(z.array(z.number()));

const recordSchema = z.object({
  nodule_id: z.string(),
  label: z.number().int(),
  biomarkers: z.record(z.string(), z.number()),
  views: z.object({
    axial: viewSchema,
    coronal: viewSchema,
    sagittal: viewSchema,
  }),
}).passthrough();

const planSchema = z.object({
  k: z.number().int(),
  seed: z.number().int(),
  stratified: z.boolean(),
  assignment: z.record(z.string(), z.number().int()),
}).passthrough();

function checkSquare(view: number[][], name: string, file: string): void {
  const n = view.length;
  if (n === 0 || view.some((row) => row.length !== n)) {
    throw new CohortFormatError(`${file}: ${name} view is not a square grid`);
  }
}

function parseRecord(file: string): NoduleRecord {
  const parsed = recordSchema.safeParse(
    JSON.parse(fs.readFileSync(file, "utf-8")));
  if (!parsed.success) {
    throw new CohortFormatError(`${file}: ${parsed.error.issues[0].message}`);
  }
  const raw = parsed.data;
  if (raw.label !== 0 && raw.label !== 1) {
    throw new CohortFormatError(`${file}: label must be 0 or 1`);
  }
  const biomarkers = BIOMARKER_NAMES.map((name) => {
    const v = raw.biomarkers[name];
    if (v === undefined) {
      throw new CohortFormatError(`${file}: missing biomarker ${name}`);
    }
    return v;
  });
  const size = raw.views.axial.length;
  for (const name of VIEW_NAMES) {
    checkSquare(raw.views[name], name, file);
    if (raw.views[name].length !== size) {
      throw new CohortFormatError(`${file}: views disagree on crop size`);
    }
  }
  return {
    noduleId: raw.nodule_id,
    label: raw.label,
    biomarkers,
    views: raw.views,
  };
}

/** Load every *.record.json under dir, sorted by nodule id. */
export function loadCohort(dir: string): NoduleRecord[] {
  const files = fs.readdirSync(dir)
    .filter((f) => f.endsWith(".record.json"))
    .sort();
  if (files.length === 0) {
    throw new CohortFormatError(`no *.record.json files under ${dir}`);
  }
  const records = files.map((f) => parseRecord(path.join(dir, f)));
  records.sort((a, b) => (a.noduleId < b.noduleId ? -1 : 1));
  const size = records[0].views.axial.length;
  for (const r of records) {
    if (r.views.axial.length !== size) {
      throw new CohortFormatError(
        `${r.noduleId}: crop size ${r.views.axial.length} != ${size}`);
    }
  }
  return records;
}

/**
 * Load the fold plan exported by the evaluation pipeline. The plan is the
 * single source of the split: a missing file aborts rather than silently
 * re-splitting, which would invite leakage between runs.
 */
export function loadFoldPlan(file: string): FoldPlan {
  if (!fs.existsSync(file)) {
    throw new MissingFoldPlanError(
      `fold plan ${file} not found; refusing to run without an imported split`);
  }
  const parsed = planSchema.safeParse(
    JSON.parse(fs.readFileSync(file, "utf-8")));
  if (!parsed.success) {
    throw new CohortFormatError(`${file}: ${parsed.error.issues[0].message}`);
  }
  const plan = parsed.data;
  if (plan.k < 2) {
    throw new CohortFormatError(`${file}: k must be >= 2`);
  }
  for (const [id, fold] of Object.entries(plan.assignment)) {
    if (fold < 0 || fold >= plan.k) {
      throw new CohortFormatError(`${file}: fold ${fold} for ${id} out of range`);
    }
  }
  return {
    k: plan.k,
    seed: plan.seed,
    stratified: plan.stratified,
    assignment: plan.assignment,
  };
}

/** Require the plan and the cohort to name exactly the same nodules. */
export function checkPlanCoversCohort(records: NoduleRecord[],
                                      plan: FoldPlan): void {
  const planIds = new Set(Object.keys(plan.assignment));
  const missing = records.filter((r) => !planIds.has(r.noduleId));
  if (missing.length > 0) {
    throw new CohortFormatError(
      `fold plan misses ids: ${missing.map((r) => r.noduleId).join(", ")}`);
  }
  const cohortIds = new Set(records.map((r) => r.noduleId));
  const extra = [...planIds].filter((id) => !cohortIds.has(id));
  if (extra.length > 0) {
    throw new CohortFormatError(`fold plan has unknown ids: ${extra.join(", ")}`);
  }
}
