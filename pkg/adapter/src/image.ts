import { PNG } from 'pngjs';

/**
 * An 8-bit raster in row-major, channel-interleaved order, as the scoring
 * wire protocol exchanges it: grayscale (1 channel) or RGB (3 channels).
 */
export interface DecodedImage {
  width: number;
  height: number;
  channels: 1 | 3;
  /** length = width * height * channels, values 0..255 */
  data: Uint8Array;
}

/** Raised for anything wrong with the request payload itself. */
export class RequestError extends Error {}

const BASE64_RE = /^[A-Za-z0-9+/]*={0,2}$/;

/**
 * Decodes a base64 string strictly: the alphabet and padding must be exact,
 * mirroring validating decoders on the client side (a lenient decode would
 * accept garbage and fail later with a misleading PNG error).
 */
export function decodeBase64Strict(text: string): Buffer {
  if (typeof text !== 'string' || text.length % 4 !== 0 || !BASE64_RE.test(text)) {
    throw new RequestError('invalid base64 image payload');
  }
  return Buffer.from(text, 'base64');
}

/**
 * Parses a PNG buffer into a DecodedImage. Grayscale PNGs stay 1-channel;
 * everything else (RGB, palette, alpha variants) is read as RGB with any
 * alpha discarded, since the scoring models consume opaque rasters only.
 */
export function decodePngImage(buffer: Buffer): DecodedImage {
  let png: PNG;
  try {
    png = PNG.sync.read(buffer);
  } catch (err) {
    throw new RequestError(`not a decodable PNG: ${(err as Error).message}`);
  }
  const { width, height, colorType } = png as PNG & { colorType: number };
  const channels: 1 | 3 = colorType === 0 || colorType === 4 ? 1 : 3;
  const data = new Uint8Array(width * height * channels);
  // pngjs always expands parsed data to 8-bit RGBA
  for (let px = 0; px < width * height; px++) {
    if (channels === 1) {
      data[px] = png.data[px * 4];
    } else {
      data[px * 3] = png.data[px * 4];
      data[px * 3 + 1] = png.data[px * 4 + 1];
      data[px * 3 + 2] = png.data[px * 4 + 2];
    }
  }
  return { width, height, channels, data };
}

/** Optional deterministic preprocessing applied before the model sees pixels. */
export interface PreprocessSpec {
  /** bilinear resize to this size; null leaves the raster untouched */
  resize?: { width: number; height: number } | null;
  /** per-channel normalization; length 1 broadcasts to all channels */
  mean?: number[];
  std?: number[];
}

/** A preprocessed raster: normalized real values, model-ready. */
export interface ModelInput {
  width: number;
  height: number;
  channels: 1 | 3;
  /** length = width * height * channels */
  values: Float64Array;
}

function channelParam(name: string, raw: number[] | undefined,
                      channels: number, fallback: number): number[] {
  if (raw === undefined) return new Array(channels).fill(fallback);
  if (raw.length === 1) return new Array(channels).fill(raw[0]);
  if (raw.length !== channels) {
    throw new Error(`preprocess.${name} has ${raw.length} entries for ${channels} channels`);
  }
  return raw;
}

function resizeBilinear(img: DecodedImage, width: number, height: number): DecodedImage {
  const out = new Uint8Array(width * height * img.channels);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let y = 0; y < height; y++) {
    const srcY = Math.min(Math.max((y + 0.5) * sy - 0.5, 0), img.height - 1);
    const y0 = Math.floor(srcY);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const fy = srcY - y0;
    for (let x = 0; x < width; x++) {
      const srcX = Math.min(Math.max((x + 0.5) * sx - 0.5, 0), img.width - 1);
      const x0 = Math.floor(srcX);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const fx = srcX - x0;
      for (let c = 0; c < img.channels; c++) {
        const at = (yy: number, xx: number) =>
          img.data[(yy * img.width + xx) * img.channels + c];
        const top = at(y0, x0) * (1 - fx) + at(y0, x1) * fx;
        const bottom = at(y1, x0) * (1 - fx) + at(y1, x1) * fx;
        out[(y * width + x) * img.channels + c] = Math.round(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return { width, height, channels: img.channels, data: out };
}

/**
 * Applies the declared preprocessing: optional bilinear resize, then
 * per-channel (x/255 - mean) / std normalization. Pure and deterministic.
 */
export function preprocessImage(img: DecodedImage, spec: PreprocessSpec): ModelInput {
  let raster = img;
  if (spec.resize) {
    raster = resizeBilinear(img, spec.resize.width, spec.resize.height);
  }
  const mean = channelParam('mean', spec.mean, raster.channels, 0);
  const std = channelParam('std', spec.std, raster.channels, 1);
  for (const s of std) {
    if (s === 0) throw new Error('preprocess.std must be nonzero');
  }
  const values = new Float64Array(raster.data.length);
  for (let i = 0; i < raster.data.length; i++) {
    const c = i % raster.channels;
    values[i] = (raster.data[i] / 255 - mean[c]) / std[c];
  }
  return { width: raster.width, height: raster.height, channels: raster.channels, values };
}
