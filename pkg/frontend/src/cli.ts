/**
 * Command-line entry: train-cbm and train-e2e. Both read a cohort directory
 * of *.record.json files plus the exported fold plan, and refuse to run when
 * the plan file is missing.
 */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadCohort, loadFoldPlan } from "./cohort";
import { paperBackbone, smokeBackbone } from "./model";
import {
  TrainSpec, defaultTrainSpec, trainCbm, trainEndToEnd,
  writeCbmOutputs, writeEndToEndOutputs,
} from "./train";

interface CommonArgs {
  cohort: string;
  plan: string;
  out: string;
  epochs: number;
  batch: number;
  lr: number;
  inputSize: number;
  seed: number;
  backbone: string;
}

function specFromArgs(args: CommonArgs): TrainSpec {
  if (args.backbone !== "paper" && args.backbone !== "smoke") {
    throw new Error(`unknown backbone ${args.backbone} (want paper or smoke)`);
  }
  return defaultTrainSpec({
    epochs: args.epochs,
    batch: args.batch,
    lr: args.lr,
    inputSize: args.inputSize,
    seed: args.seed,
    backbone: args.backbone === "paper" ? paperBackbone() : smokeBackbone(),
  });
}

function commonOptions(cmd: yargs.Argv): yargs.Argv {
  return cmd
    .option("cohort", { type: "string", demandOption: true,
                        describe: "directory of *.record.json files" })
    .option("plan", { type: "string", demandOption: true,
                      describe: "fold plan JSON exported by the evaluator" })
    .option("out", { type: "string", demandOption: true,
                     describe: "output directory" })
    .option("epochs", { type: "number", default: 50 })
    .option("batch", { type: "number", default: 32 })
    .option("lr", { type: "number", default: 1e-3 })
    .option("input-size", { type: "number", default: 224 })
    .option("seed", { type: "number", default: 0 })
    .option("backbone", { type: "string", default: "paper",
                          describe: "paper (50-layer bottleneck) or smoke" });
}

async function runCbm(args: CommonArgs): Promise<void> {
  const records = loadCohort(args.cohort);
  const plan = loadFoldPlan(args.plan);
  const result = await trainCbm(records, plan, specFromArgs(args));
  writeCbmOutputs(args.out, result);
  console.log(`wrote predicted_biomarkers.csv for ${result.ids.length} nodules`);
}

async function runEndToEnd(args: CommonArgs): Promise<void> {
  const records = loadCohort(args.cohort);
  const plan = loadFoldPlan(args.plan);
  const spec = specFromArgs(args);
  const result = await trainEndToEnd(records, plan, spec);
  writeEndToEndOutputs(args.out, result, spec);
  console.log(`wrote cnn_features.csv and e2e_metrics.json for ` +
              `${result.ids.length} nodules`);
}

export async function main(argv: string[]): Promise<number> {
  let failed = false;
  const parser = yargs(argv)
    .scriptName("cbm-trainer")
    .command("train-cbm", "train the per-fold biomarker regressor",
             (cmd) => commonOptions(cmd),
             async (args) => runCbm(args as unknown as CommonArgs))
    .command("train-e2e", "train the per-fold end-to-end classifier",
             (cmd) => commonOptions(cmd),
             async (args) => runEndToEnd(args as unknown as CommonArgs))
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      console.error(`error: ${err ? err.message : msg}`);
      failed = true;
    });
  try {
    await parser.parseAsync();
  } catch (err) {
    if (!failed) {
      console.error(`error: ${(err as Error).message}`);
    }
    failed = true;
  }
  return failed ? 2 : 0;
}

if (require.main === module) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${err.message}`);
      process.exit(2);
    });
}
