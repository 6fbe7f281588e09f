/**
 * Per-fold training for the biomarker regressor (concept bottleneck) and the
 * end-to-end malignancy classifier.
 *
 * Protocol per fold: train on the other folds with one randomly selected
 * view per sample per epoch, mini-batches of `batch`, adaptive-moment
 * optimizer at `lr` annealed by `lrDecayFactor` after each epoch listed in
 * `lrDecayEpochs`; predict the held-out fold as the mean over all three
 * views. Pixel and target normalization are fitted on the training folds
 * only and replayed on the held-out fold.
 */
import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import {
  BIOMARKER_NAMES, FoldPlan, NoduleRecord, VIEW_NAMES,
  checkPlanCoversCohort,
} from "./cohort";
import { atomicWrite, writeFeatureCsv } from "./csv";
import { FoldMetrics, buildReport, foldMetrics } from "./metrics";
import {
  BackboneConfig, buildCbmModel, buildEndToEndModel, featureExtractor,
  paperBackbone, pooledWidth,
} from "./model";
import { Rng, mulberry32, randInt, shuffle } from "./rng";

export interface TrainSpec {
  epochs: number;
  batch: number;
  lr: number;
  lrDecayEpochs: number[];
  lrDecayFactor: number;
  inputSize: number;
  seed: number;
  backbone: BackboneConfig;
}

export function defaultTrainSpec(overrides: Partial<TrainSpec> = {}): TrainSpec {
  return {
    epochs: 50,
    batch: 32,
    lr: 1e-3,
    lrDecayEpochs: [20, 40],
    lrDecayFactor: 0.1,
    inputSize: 224,
    seed: 0,
    backbone: paperBackbone(),
    ...overrides,
  };
}

interface Norm {
  mean: number;
  std: number;
}

/** Population mean/std over every pixel of every view of the given records. */
function fitPixelNorm(records: NoduleRecord[]): Norm {
  let sum = 0;
  let sumSq = 0;
  let n = 0;
  for (const r of records) {
    for (const view of VIEW_NAMES) {
      for (const row of r.views[view]) {
        for (const v of row) {
          sum += v;
          sumSq += v * v;
          n++;
        }
      }
    }
  }
  const mean = sum / n;
  const variance = Math.max(sumSq / n - mean * mean, 0);
  return { mean, std: Math.sqrt(variance) };
}

interface TargetNorm {
  mean: number[];
  std: number[];
}

function fitTargetNorm(records: NoduleRecord[]): TargetNorm {
  const d = BIOMARKER_NAMES.length;
  const mean = new Array(d).fill(0);
  const std = new Array(d).fill(0);
  for (let j = 0; j < d; j++) {
    const col = records.map((r) => r.biomarkers[j]);
    const mu = col.reduce((a, b) => a + b, 0) / col.length;
    const varPop = col.reduce((a, b) => a + (b - mu) * (b - mu), 0) / col.length;
    mean[j] = mu;
    std[j] = Math.sqrt(varPop);
  }
  return { mean, std };
}

function normalizeTargets(t: number[], norm: TargetNorm): number[] {
  return t.map((v, j) => (norm.std[j] === 0 ? 0 : (v - norm.mean[j]) / norm.std[j]));
}

function denormalizeTargets(p: number[], norm: TargetNorm): number[] {
  return p.map((v, j) => v * norm.std[j] + norm.mean[j]);
}

/**
 * Stack one chosen view per record into a normalized, resized,
 * channel-triplicated batch tensor [n, inputSize, inputSize, 3].
 */
function viewBatch(records: NoduleRecord[], viewIdx: number[], norm: Norm,
                   inputSize: number): tf.Tensor4D {
  const size = records[0].views.axial.length;
  const buf = new Float32Array(records.length * size * size);
  let at = 0;
  records.forEach((r, i) => {
    const view = r.views[VIEW_NAMES[viewIdx[i]]];
    for (const row of view) {
      for (const v of row) {
        buf[at++] = norm.std === 0 ? 0 : (v - norm.mean) / norm.std;
      }
    }
  });
  return tf.tidy(() => {
    let x = tf.tensor4d(buf, [records.length, size, size, 1]);
    if (size !== inputSize) {
      x = tf.image.resizeBilinear(x, [inputSize, inputSize]);
    }
    return tf.tile(x, [1, 1, 1, 3]) as tf.Tensor4D;
  });
}

function learningRate(spec: TrainSpec, epoch: number): number {
  const decays = spec.lrDecayEpochs.filter((d) => epoch > d).length;
  return spec.lr * Math.pow(spec.lrDecayFactor, decays);
}

/** Run the epoch loop; returns the mean training loss per epoch. */
async function fitFold(model: tf.LayersModel, records: NoduleRecord[],
                       targets: number[][], norm: Norm, spec: TrainSpec,
                       rng: Rng): Promise<number[]> {
  const losses: number[] = [];
  for (let epoch = 1; epoch <= spec.epochs; epoch++) {
    (model.optimizer as any).learningRate = learningRate(spec, epoch);
    const order = shuffle(records.map((_, i) => i), rng);
    const views = records.map(() => randInt(rng, VIEW_NAMES.length));
    let lossSum = 0;
    for (let start = 0; start < order.length; start += spec.batch) {
      const idx = order.slice(start, start + spec.batch);
      const x = viewBatch(idx.map((i) => records[i]),
                          idx.map((i) => views[i]), norm, spec.inputSize);
      const y = tf.tensor2d(idx.map((i) => targets[i]));
      const loss = await model.trainOnBatch(x, y) as number;
      x.dispose();
      y.dispose();
      lossSum += loss * idx.length;
    }
    losses.push(lossSum / order.length);
  }
  return losses;
}

/** Predict each record as the mean over its three views. */
function predictMeanViews(model: tf.LayersModel, records: NoduleRecord[],
                          norm: Norm, spec: TrainSpec): number[][] {
  const width = (model.outputs[0].shape[1] ?? 0) as number;
  const acc = records.map(() => new Array(width).fill(0));
  for (let v = 0; v < VIEW_NAMES.length; v++) {
    const x = viewBatch(records, records.map(() => v), norm, spec.inputSize);
    const out = model.predict(x, { batchSize: spec.batch }) as tf.Tensor2D;
    const rows = out.arraySync();
    x.dispose();
    out.dispose();
    rows.forEach((row, i) => {
      row.forEach((val, j) => {
        acc[i][j] += val / VIEW_NAMES.length;
      });
    });
  }
  return acc;
}

function splitFold(records: NoduleRecord[], plan: FoldPlan,
                   fold: number): [NoduleRecord[], NoduleRecord[]] {
  const train = records.filter((r) => plan.assignment[r.noduleId] !== fold);
  const test = records.filter((r) => plan.assignment[r.noduleId] === fold);
  if (train.length === 0 || test.length === 0) {
    throw new Error(`fold ${fold} is empty on one side`);
  }
  return [train, test];
}

function disposeModel(model: tf.LayersModel): void {
  const opt = model.optimizer as unknown as { dispose?: () => void };
  if (opt && opt.dispose) opt.dispose();
  model.dispose();
}

export interface CbmResult {
  ids: string[];
  predictions: number[][];          // raw biomarker scale, one row per id
  folds: Record<string, number>;
  epochLosses: number[][];          // per fold, per epoch
}

/** Train the biomarker regressor per fold and predict every held-out fold. */
export async function trainCbm(records: NoduleRecord[], plan: FoldPlan,
                               spec: TrainSpec): Promise<CbmResult> {
  checkPlanCoversCohort(records, plan);
  const byId = new Map<string, number[]>();
  const epochLosses: number[][] = [];
  for (let fold = 0; fold < plan.k; fold++) {
    const [train, test] = splitFold(records, plan, fold);
    const pixelNorm = fitPixelNorm(train);
    const targetNorm = fitTargetNorm(train);
    const targets = train.map((r) => normalizeTargets(r.biomarkers, targetNorm));
    const model = buildCbmModel(spec.backbone, spec.inputSize,
                                spec.seed * 1000 + fold);
    const rng = mulberry32(spec.seed * 7919 + fold + 1);
    epochLosses.push(await fitFold(model, train, targets, pixelNorm, spec, rng));
    const preds = predictMeanViews(model, test, pixelNorm, spec);
    test.forEach((r, i) => {
      byId.set(r.noduleId, denormalizeTargets(preds[i], targetNorm));
    });
    disposeModel(model);
  }
  const ids = records.map((r) => r.noduleId);
  return {
    ids,
    predictions: ids.map((id) => byId.get(id)!),
    folds: Object.fromEntries(ids.map((id) => [id, plan.assignment[id]])),
    epochLosses,
  };
}

/**
 * Write predicted_biomarkers.csv (nodule_id + the 8 biomarker columns, the
 * schema the evaluation pipeline ingests as a feature table) plus a fold
 * sidecar mapping each nodule to the fold whose model predicted it.
 */
export function writeCbmOutputs(outDir: string, result: CbmResult): void {
  fs.mkdirSync(outDir, { recursive: true });
  writeFeatureCsv(path.join(outDir, "predicted_biomarkers.csv"),
                  [...BIOMARKER_NAMES], result.ids, result.predictions);
  atomicWrite(path.join(outDir, "predicted_biomarkers.folds.json"),
              JSON.stringify(result.folds, null, 2) + "\n");
}

export interface EndToEndResult {
  ids: string[];
  features: number[][];             // pooled backbone features per id
  folds: FoldMetrics[];
  report: object;
  epochLosses: number[][];
}

/** Train the end-to-end classifier per fold; collect metrics and features. */
export async function trainEndToEnd(records: NoduleRecord[], plan: FoldPlan,
                                    spec: TrainSpec): Promise<EndToEndResult> {
  checkPlanCoversCohort(records, plan);
  const scoreById = new Map<string, number>();
  const featById = new Map<string, number[]>();
  const folds: FoldMetrics[] = [];
  const epochLosses: number[][] = [];
  for (let fold = 0; fold < plan.k; fold++) {
    const [train, test] = splitFold(records, plan, fold);
    const pixelNorm = fitPixelNorm(train);
    const targets = train.map((r) => (r.label === 1 ? [0, 1] : [1, 0]));
    const model = buildEndToEndModel(spec.backbone, spec.inputSize,
                                     spec.seed * 1000 + fold);
    const rng = mulberry32(spec.seed * 7919 + fold + 1);
    epochLosses.push(await fitFold(model, train, targets, pixelNorm, spec, rng));
    const probs = predictMeanViews(model, test, pixelNorm, spec);
    const scores = probs.map((p) => p[1]);
    test.forEach((r, i) => scoreById.set(r.noduleId, scores[i]));
    folds.push(foldMetrics(fold, scores, test.map((r) => r.label)));
    const extractor = featureExtractor(model);
    const feats = predictMeanViews(extractor, test, pixelNorm, spec);
    test.forEach((r, i) => featById.set(r.noduleId, feats[i]));
    disposeModel(model);
  }
  const ids = records.map((r) => r.noduleId);
  return {
    ids,
    features: ids.map((id) => featById.get(id)!),
    folds,
    report: buildReport("cnn-e2e", "cnn", spec.seed, plan.k, folds),
    epochLosses,
  };
}

/** Write cnn_features.csv and e2e_metrics.json in the documented schemas. */
export function writeEndToEndOutputs(outDir: string, result: EndToEndResult,
                                     spec: TrainSpec): void {
  fs.mkdirSync(outDir, { recursive: true });
  const width = pooledWidth(spec.backbone);
  const columns = Array.from({ length: width },
                             (_, i) => `cnn_${String(i).padStart(4, "0")}`);
  writeFeatureCsv(path.join(outDir, "cnn_features.csv"),
                  columns, result.ids, result.features);
  atomicWrite(path.join(outDir, "e2e_metrics.json"),
              JSON.stringify(result.report, null, 2) + "\n");
}
