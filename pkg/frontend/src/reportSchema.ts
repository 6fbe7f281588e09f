/**
 * zod schema for the consolidated evaluation report JSON. Shared between the
 * trainer's own output and the evaluation pipeline's report files, so drift
 * in either direction fails validation.
 */
import { z } from "zod";

const intLike = z.number().int();

const rocEntry = z.tuple([
  z.union([z.number(), z.literal("inf"), z.literal("-inf")]),
  z.number().min(0).max(1),
  z.number().min(0).max(1),
]);

const foldSchema = z.object({
  fold: intLike.min(0),
  n_test: intLike.positive(),
  tp: intLike.min(0),
  fp: intLike.min(0),
  tn: intLike.min(0),
  fn: intLike.min(0),
  accuracy: z.number().min(0).max(1),
  recall: z.number().min(0).max(1).nullable(),
  precision: z.number().min(0).max(1).nullable(),
  auc: z.number().min(0).max(1).nullable(),
  degenerate: z.boolean(),
  roc: z.array(rocEntry),
}).strict();

const censusSchema = z.object({
  selected: z.array(z.string()),
  count: intLike.min(0),
  total: intLike.positive(),
  percentage: z.number().min(0).max(100),
  by_source: z.record(z.string(), z.array(z.string())),
}).strict();

export const reportSchema = z.object({
  classifier: z.string(),
  feature_set: z.string(),
  seed: intLike,
  k: intLike.min(2),
  hyperparameters: z.object({
    C: z.number().nullable(),
    l1_lambda: z.number().nullable(),
    gamma: z.number().nullable(),
    n_trees: intLike.nullable(),
  }).strict(),
  folds: z.array(foldSchema),
  mean_accuracy: z.number().min(0).max(1),
  mean_recall: z.number().min(0).max(1).nullable(),
  mean_precision: z.number().min(0).max(1).nullable(),
  mean_auc: z.number().min(0).max(1).nullable(),
  degenerate_folds: z.array(intLike.min(0)),
  census: censusSchema.nullable(),
  nested_selected: z.array(z.number()).nullable(),
}).strict();

export type EvalReportJson = z.infer<typeof reportSchema>;
