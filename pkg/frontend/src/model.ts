/**
 * Residual CNN backbone with swappable heads. The default configuration is
 * the standard 50-layer bottleneck network (stem 7x7/2 + max-pool, stages of
 * 3/4/6/3 blocks, global average pooling into 2048 features); a small
 * basic-block configuration keeps smoke tests cheap. Weights start from
 * seeded random initializers, so builds are reproducible per seed.
 */
import * as tf from "@tensorflow/tfjs";

export interface BackboneConfig {
  stemFilters: number;
  stemKernel: number;
  stemStride: number;
  stemPool: boolean;
  stages: number[];      // residual blocks per stage
  filters: number[];     // base filters per stage, one entry per stage
  bottleneck: boolean;   // 1x1-3x3-1x1 blocks with 4x expansion when true
}

export function paperBackbone(): BackboneConfig {
  return {
    stemFilters: 64,
    stemKernel: 7,
    stemStride: 2,
    stemPool: true,
    stages: [3, 4, 6, 3],
    filters: [64, 128, 256, 512],
    bottleneck: true,
  };
}

export function smokeBackbone(): BackboneConfig {
  return {
    stemFilters: 8,
    stemKernel: 3,
    stemStride: 1,
    stemPool: false,
    stages: [1, 1],
    filters: [8, 16],
    bottleneck: false,
  };
}

/** Width of the pooled feature vector the backbone emits. */
export function pooledWidth(cfg: BackboneConfig): number {
  return cfg.filters[cfg.filters.length - 1] * (cfg.bottleneck ? 4 : 1);
}

type Sym = tf.SymbolicTensor;

function seeder(base: number): () => number {
  let n = 0;
  return () => base + n++;
}

function conv(x: Sym, filters: number, kernel: number, stride: number,
              seed: () => number): Sym {
  return tf.layers.conv2d({
    filters,
    kernelSize: kernel,
    strides: stride,
    padding: "same",
    useBias: false,
    kernelInitializer: tf.initializers.heNormal({ seed: seed() }),
  }).apply(x) as Sym;
}

function bnRelu(x: Sym, relu: boolean): Sym {
  const y = tf.layers.batchNormalization({}).apply(x) as Sym;
  return relu ? (tf.layers.reLU().apply(y) as Sym) : y;
}

function basicBlock(x: Sym, filters: number, stride: number,
                    seed: () => number): Sym {
  let y = bnRelu(conv(x, filters, 3, stride, seed), true);
  y = bnRelu(conv(y, filters, 3, 1, seed), false);
  let shortcut = x;
  if (stride !== 1 || x.shape[3] !== filters) {
    shortcut = bnRelu(conv(x, filters, 1, stride, seed), false);
  }
  const sum = tf.layers.add().apply([y, shortcut]) as Sym;
  return tf.layers.reLU().apply(sum) as Sym;
}

function bottleneckBlock(x: Sym, filters: number, stride: number,
                         seed: () => number): Sym {
  const out = filters * 4;
  let y = bnRelu(conv(x, filters, 1, 1, seed), true);
  y = bnRelu(conv(y, filters, 3, stride, seed), true);
  y = bnRelu(conv(y, out, 1, 1, seed), false);
  let shortcut = x;
  if (stride !== 1 || x.shape[3] !== out) {
    shortcut = bnRelu(conv(x, out, 1, stride, seed), false);
  }
  const sum = tf.layers.add().apply([y, shortcut]) as Sym;
  return tf.layers.reLU().apply(sum) as Sym;
}

function backboneOutput(input: Sym, cfg: BackboneConfig,
                        seed: () => number): Sym {
  if (cfg.stages.length !== cfg.filters.length) {
    throw new Error("stages and filters must have the same length");
  }
  let x = bnRelu(conv(input, cfg.stemFilters, cfg.stemKernel, cfg.stemStride,
                      seed), true);
  if (cfg.stemPool) {
    x = tf.layers.maxPooling2d({ poolSize: 3, strides: 2, padding: "same" })
      .apply(x) as Sym;
  }
  cfg.stages.forEach((blocks, stage) => {
    for (let b = 0; b < blocks; b++) {
      const stride = b === 0 && stage > 0 ? 2 : 1;
      x = cfg.bottleneck
        ? bottleneckBlock(x, cfg.filters[stage], stride, seed)
        : basicBlock(x, cfg.filters[stage], stride, seed);
    }
  });
  return tf.layers.globalAveragePooling2d({ name: "gap" }).apply(x) as Sym;
}

function buildModel(cfg: BackboneConfig, inputSize: number, headUnits: number,
                    headActivation: "linear" | "softmax",
                    seedBase: number): tf.LayersModel {
  const seed = seeder(seedBase * 100000);
  const input = tf.input({ shape: [inputSize, inputSize, 3] });
  const pooled = backboneOutput(input, cfg, seed);
  const head = tf.layers.dense({
    units: headUnits,
    activation: headActivation,
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed() }),
    name: "head",
  }).apply(pooled) as Sym;
  return tf.model({ inputs: input, outputs: head });
}

/** Regression model: pooled features into an 8-unit linear biomarker head. */
export function buildCbmModel(cfg: BackboneConfig, inputSize: number,
                              seedBase: number): tf.LayersModel {
  const model = buildModel(cfg, inputSize, 8, "linear", seedBase);
  model.compile({ optimizer: tf.train.adam(1e-3), loss: "meanSquaredError" });
  return model;
}

/** Classification model: pooled features into a 2-unit softmax head. */
export function buildEndToEndModel(cfg: BackboneConfig, inputSize: number,
                                   seedBase: number): tf.LayersModel {
  const model = buildModel(cfg, inputSize, 2, "softmax", seedBase);
  model.compile({
    optimizer: tf.train.adam(1e-3),
    loss: "categoricalCrossentropy",
  });
  return model;
}

/** Submodel exposing the pooled feature vector under the trained weights. */
export function featureExtractor(model: tf.LayersModel): tf.LayersModel {
  return tf.model({
    inputs: model.inputs,
    outputs: model.getLayer("gap").output,
  });
}
