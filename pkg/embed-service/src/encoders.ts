/**
 * The "lite" dual encoder backing the service.
 *
 * No pretrained audio-language checkpoint ships with this sidecar; instead
 * it serves deterministic stand-in embeddings that honor every wire-level
 * guarantee (dimension, unit norm, determinism) so clients can be developed
 * and tested against the real protocol. Text goes through hashed character
 * n-grams, audio through log-mel statistics. Swap in a real model by
 * replacing these two functions; the routes stay the same.
 */

export const MODEL_ID = 'lite-dual-encoder-v1'
export const EMBED_DIM = 512
export const SAMPLE_RATE = 48000
export const FRAME_SIZE = 2048
export const HOP_SIZE = 1024
export const N_MELS = 128
const ENERGY_FLOOR = 1e-10

import { fftMagnitudes } from './fft.js'

function l2Normalize(v: Float64Array): number[] {
  let norm = 0
  for (const x of v) norm += x * x
  norm = Math.sqrt(norm)
  if (norm === 0) throw new Error('zero-norm embedding')
  return Array.from(v, (x) => x / norm)
}

// ---------------------------------------------------------------------------
// Text: hashed character trigrams with sign, i.e. the hashing trick
// ---------------------------------------------------------------------------

function fnv1a(text: string): number {
  let hash = 0x811c9dc5
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i)
    hash = Math.imul(hash, 0x01000193) >>> 0
  }
  return hash >>> 0
}

export function embedText(text: string): number[] {
  const padded = `  ${text.toLowerCase()}  `
  const acc = new Float64Array(EMBED_DIM)
  for (let i = 0; i + 3 <= padded.length; i++) {
    const hash = fnv1a(padded.slice(i, i + 3))
    const index = hash % EMBED_DIM
    const sign = (hash >>> 16) & 1 ? 1 : -1
    acc[index] += sign
  }
  return l2Normalize(acc)
}

// ---------------------------------------------------------------------------
// Audio: log-mel band means and standard deviations
// ---------------------------------------------------------------------------

function hzToMel(f: number): number {
  return 2595 * Math.log10(1 + f / 700)
}

function melToHz(m: number): number {
  return 700 * (10 ** (m / 2595) - 1)
}

function buildMelFilterbank(): Float64Array[] {
  const bins = FRAME_SIZE / 2 + 1
  const melPoints: number[] = []
  const maxMel = hzToMel(SAMPLE_RATE / 2)
  for (let i = 0; i < N_MELS + 2; i++) {
    melPoints.push(melToHz((maxMel * i) / (N_MELS + 1)))
  }
  const filters: Float64Array[] = []
  for (let m = 0; m < N_MELS; m++) {
    const [lo, mid, hi] = [melPoints[m], melPoints[m + 1], melPoints[m + 2]]
    const filter = new Float64Array(bins)
    for (let k = 0; k < bins; k++) {
      const f = (k * SAMPLE_RATE) / FRAME_SIZE
      const up = (f - lo) / (mid - lo)
      const down = (hi - f) / (hi - mid)
      filter[k] = Math.max(0, Math.min(up, down))
    }
    filters.push(filter)
  }
  return filters
}

const MEL_FILTERS = buildMelFilterbank()
const HANN = Float64Array.from({ length: FRAME_SIZE }, (_, i) =>
  0.5 - 0.5 * Math.cos((2 * Math.PI * i) / (FRAME_SIZE - 1)),
)

export function embedAudio(samples: Float32Array): number[] {
  if (samples.length < FRAME_SIZE) {
    throw new Error(
      `audio of ${samples.length} samples is shorter than one ${FRAME_SIZE}-sample frame`,
    )
  }
  const nFrames = Math.floor((samples.length - FRAME_SIZE) / HOP_SIZE) + 1
  const logMel: Float64Array[] = []
  const frame = new Float64Array(FRAME_SIZE)
  for (let t = 0; t < nFrames; t++) {
    const offset = t * HOP_SIZE
    for (let i = 0; i < FRAME_SIZE; i++) {
      frame[i] = samples[offset + i] * HANN[i]
    }
    const mags = fftMagnitudes(frame)
    const bands = new Float64Array(N_MELS)
    for (let m = 0; m < N_MELS; m++) {
      const filter = MEL_FILTERS[m]
      let energy = 0
      for (let k = 0; k < mags.length; k++) {
        const w = filter[k]
        if (w > 0) energy += w * mags[k] * mags[k]
      }
      bands[m] = Math.log(energy + ENERGY_FLOOR)
    }
    logMel.push(bands)
  }

  const acc = new Float64Array(EMBED_DIM)
  for (let m = 0; m < N_MELS; m++) {
    let mean = 0
    for (const bands of logMel) mean += bands[m]
    mean /= nFrames
    let variance = 0
    for (const bands of logMel) variance += (bands[m] - mean) ** 2
    acc[m] = mean
    acc[N_MELS + m] = Math.sqrt(variance / nFrames)
  }
  return l2Normalize(acc)
}
