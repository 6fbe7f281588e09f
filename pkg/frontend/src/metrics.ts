/**
 * Fold metrics and the consolidated evaluation report. Conventions match the
 * evaluation pipeline so the emitted JSON validates against the same schema:
 * ROC thresholds run +inf, each distinct score descending, -inf with
 * score >= threshold counted positive; a single-class test fold is flagged
 * degenerate with a null AUC; means skip null entries.
 */

export interface FoldMetrics {
  fold: number;
  nTest: number;
  tp: number;
  fp: number;
  tn: number;
  fn: number;
  accuracy: number;
  recall: number | null;
  precision: number | null;
  auc: number | null;
  degenerate: boolean;
  roc: Array<[number, number, number]>;   // (threshold, fpr, tpr)
}

export function rocPoints(scores: number[],
                          labels: number[]): Array<[number, number, number]> {
  const nPos = labels.filter((y) => y === 1).length;
  const nNeg = labels.filter((y) => y === 0).length;
  if (nPos === 0 || nNeg === 0) {
    throw new Error("ROC needs both classes present");
  }
  const distinct = [...new Set(scores)].sort((a, b) => b - a);
  const thresholds = [Infinity, ...distinct, -Infinity];
  return thresholds.map((t) => {
    let tp = 0;
    let fp = 0;
    scores.forEach((s, i) => {
      if (s >= t) {
        if (labels[i] === 1) tp++;
        else fp++;
      }
    });
    return [t, fp / nNeg, tp / nPos];
  });
}

export function aucTrapezoid(points: Array<[number, number, number]>): number {
  let auc = 0;
  for (let i = 1; i < points.length; i++) {
    const [, x0, y0] = points[i - 1];
    const [, x1, y1] = points[i];
    auc += (x1 - x0) * (y0 + y1) / 2;
  }
  return auc;
}

/** Score a held-out fold; scores are P(malignant), threshold 0.5. */
export function foldMetrics(fold: number, scores: number[],
                            labels: number[]): FoldMetrics {
  const pred = scores.map((s) => (s > 0.5 ? 1 : 0));
  let tp = 0;
  let fp = 0;
  let tn = 0;
  let fn = 0;
  pred.forEach((p, i) => {
    if (p === 1 && labels[i] === 1) tp++;
    else if (p === 1 && labels[i] === 0) fp++;
    else if (p === 0 && labels[i] === 0) tn++;
    else fn++;
  });
  const degenerate = Math.min(...labels) === Math.max(...labels);
  const roc = degenerate ? [] : rocPoints(scores, labels);
  return {
    fold,
    nTest: labels.length,
    tp, fp, tn, fn,
    accuracy: (tp + tn) / labels.length,
    recall: tp + fn > 0 ? tp / (tp + fn) : null,
    precision: tp + fp > 0 ? tp / (tp + fp) : null,
    auc: degenerate ? null : aucTrapezoid(roc),
    degenerate,
    roc,
  };
}

function meanOrNull(values: Array<number | null>): number | null {
  const defined = values.filter((v): v is number => v !== null);
  if (defined.length === 0) return null;
  return defined.reduce((a, b) => a + b, 0) / defined.length;
}

function jsonThreshold(t: number): number | string {
  if (t === Infinity) return "inf";
  if (t === -Infinity) return "-inf";
  return t;
}

/** Assemble the report object in the evaluation pipeline's JSON schema. */
export function buildReport(classifier: string, featureSet: string,
                            seed: number, k: number,
                            folds: FoldMetrics[]): object {
  return {
    classifier,
    feature_set: featureSet,
    seed,
    k,
    hyperparameters: { C: null, l1_lambda: null, gamma: null, n_trees: null },
    folds: folds.map((f) => ({
      fold: f.fold,
      n_test: f.nTest,
      tp: f.tp, fp: f.fp, tn: f.tn, fn: f.fn,
      accuracy: f.accuracy,
      recall: f.recall,
      precision: f.precision,
      auc: f.auc,
      degenerate: f.degenerate,
      roc: f.roc.map(([t, fpr, tpr]) => [jsonThreshold(t), fpr, tpr]),
    })),
    mean_accuracy: meanOrNull(folds.map((f) => f.accuracy)),
    mean_recall: meanOrNull(folds.map((f) => f.recall)),
    mean_precision: meanOrNull(folds.map((f) => f.precision)),
    mean_auc: meanOrNull(folds.map((f) => f.auc)),
    degenerate_folds: folds.filter((f) => f.degenerate).map((f) => f.fold),
    census: null,
    nested_selected: null,
  };
}
