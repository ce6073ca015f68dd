import { DecodedImage, ModelInput, PreprocessSpec, RequestError, preprocessImage } from './image';

/** Shape the server advertises on /v1/info; null means unconstrained. */
export interface InputSpec {
  width: number | null;
  height: number | null;
  channels: 1 | 3;
}

/**
 * How a raw model output becomes the probability-of-fake:
 *  - 'probability': the model already emits p_fake in [0, 1]
 *  - 'logit': the model emits a single logit; apply the sigmoid
 *  - 'two_class': the model emits a [real, fake] distribution; take the
 *    component at fake_class_index
 * The rule is declared in the config, never guessed from output ranges.
 */
export type OutputKind = 'probability' | 'logit' | 'two_class';

export interface ModelConfig {
  loader: 'constant' | 'linear';
  output: OutputKind;
  name?: string;
  /** constant loader: the single raw output (or two_class distribution) */
  score?: number;
  distribution?: number[];
  /** linear loader: flat weights over normalized pixels, plus a bias */
  weights?: number[];
  bias?: number;
  /** two_class only: which component is the fake class (default 1) */
  fake_class_index?: number;
}

export interface AdapterConfig {
  model: ModelConfig;
  input?: Partial<InputSpec>;
  preprocess?: PreprocessSpec;
  device?: string;
  batch_size_cap?: number;
}

/** Raw per-image model emission before the output rule is applied. */
export type RawOutput = number | number[];

/**
 * A loaded detector model. `forward` sees preprocessed batches no larger
 * than the configured cap and may throw; such failures surface as server
 * errors, never as partial score lists.
 */
export interface DetectorModel {
  readonly name: string;
  forward(batch: ModelInput[]): RawOutput[];
}

class ConstantModel implements DetectorModel {
  readonly name: string;
  private readonly emission: RawOutput;

  constructor(name: string, emission: RawOutput) {
    this.name = name;
    this.emission = emission;
  }

  forward(batch: ModelInput[]): RawOutput[] {
    return batch.map(() => this.emission);
  }
}

class LinearModel implements DetectorModel {
  readonly name: string;
  private readonly weights: Float64Array;
  private readonly bias: number;

  constructor(name: string, weights: number[], bias: number) {
    this.name = name;
    this.weights = Float64Array.from(weights);
    this.bias = bias;
  }

  forward(batch: ModelInput[]): RawOutput[] {
    return batch.map((input) => {
      if (input.values.length !== this.weights.length) {
        throw new Error(
          `linear model expects ${this.weights.length} values, got ${input.values.length}`);
      }
      let acc = this.bias;
      for (let i = 0; i < this.weights.length; i++) {
        acc += this.weights[i] * input.values[i];
      }
      return acc;
    });
  }
}

function loadModel(cfg: ModelConfig): DetectorModel {
  const name = cfg.name ?? cfg.loader;
  switch (cfg.loader) {
    case 'constant': {
      if (cfg.output === 'two_class') {
        if (!Array.isArray(cfg.distribution) || cfg.distribution.length !== 2) {
          throw new Error("constant two_class model needs 'distribution': [real, fake]");
        }
        return new ConstantModel(name, cfg.distribution);
      }
      if (typeof cfg.score !== 'number') {
        throw new Error("constant model needs a numeric 'score'");
      }
      return new ConstantModel(name, cfg.score);
    }
    case 'linear': {
      if (!Array.isArray(cfg.weights) || cfg.weights.length === 0) {
        throw new Error("linear model needs a non-empty 'weights' array");
      }
      return new LinearModel(name, cfg.weights, cfg.bias ?? 0);
    }
    default:
      throw new Error(`unknown model loader '${(cfg as ModelConfig).loader}'`);
  }
}

function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

function extractScore(raw: RawOutput, cfg: ModelConfig): number {
  let score: number;
  switch (cfg.output) {
    case 'probability': {
      if (typeof raw !== 'number') throw new Error('probability output must be a single number');
      score = raw;
      break;
    }
    case 'logit': {
      if (typeof raw !== 'number') throw new Error('logit output must be a single number');
      score = sigmoid(raw);
      break;
    }
    case 'two_class': {
      if (!Array.isArray(raw) || raw.length !== 2) {
        throw new Error('two_class output must be a [real, fake] pair');
      }
      score = raw[cfg.fake_class_index ?? 1];
      break;
    }
    default:
      throw new Error(`unknown output kind '${cfg.output}'`);
  }
  if (!Number.isFinite(score) || score < 0 || score > 1) {
    throw new Error(`model emitted score ${score}, outside [0, 1]`);
  }
  return score;
}

/**
 * Binds a loaded model to its declared preprocessing, input constraints,
 * and output rule, and scores decoded images under the batch-size cap.
 */
export class OracleAdapter {
  readonly model: DetectorModel;
  readonly inputSpec: InputSpec;
  private readonly cfg: AdapterConfig;

  constructor(cfg: AdapterConfig) {
    const device = cfg.device ?? 'cpu';
    if (device !== 'cpu') {
      throw new Error(`unsupported device '${device}' (only 'cpu' is available)`);
    }
    if (cfg.batch_size_cap !== undefined &&
        (!Number.isInteger(cfg.batch_size_cap) || cfg.batch_size_cap < 1)) {
      throw new Error('batch_size_cap must be a positive integer');
    }
    if (!['probability', 'logit', 'two_class'].includes(cfg.model?.output)) {
      throw new Error("model.output must be declared: 'probability', 'logit', or 'two_class'");
    }
    this.cfg = cfg;
    this.model = loadModel(cfg.model);
    this.inputSpec = {
      width: cfg.input?.width ?? null,
      height: cfg.input?.height ?? null,
      channels: cfg.input?.channels ?? 3,
    };
  }

  get batchSizeCap(): number {
    return this.cfg.batch_size_cap ?? 64;
  }

  private validate(img: DecodedImage, index: number): void {
    const { width, height } = this.inputSpec;
    if (width !== null && img.width !== width) {
      throw new RequestError(`image ${index}: width ${img.width}, model expects ${width}`);
    }
    if (height !== null && img.height !== height) {
      throw new RequestError(`image ${index}: height ${img.height}, model expects ${height}`);
    }
  }

  /**
   * Scores a decoded batch: validate and preprocess everything first, then
   * run the model in chunks of at most batch_size_cap. Scores come back in
   * request order; any model failure aborts the whole batch.
   */
  scoreBatch(images: DecodedImage[]): number[] {
    images.forEach((img, i) => this.validate(img, i));
    const prepped = images.map((img) => preprocessImage(img, this.cfg.preprocess ?? {}));
    const scores: number[] = [];
    for (let start = 0; start < prepped.length; start += this.batchSizeCap) {
      const chunk = prepped.slice(start, start + this.batchSizeCap);
      for (const raw of this.model.forward(chunk)) {
        scores.push(extractScore(raw, this.cfg.model));
      }
    }
    return scores;
  }
}
