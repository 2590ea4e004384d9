import express, { type Express } from 'express'

import { EMBED_DIM, MODEL_ID, SAMPLE_RATE, embedAudio, embedText } from './encoders.js'

export const MAX_BATCH = 256
export const MAX_SECONDS = 10

function badRequest(res: express.Response, message: string): void {
  res.status(400).json({ error: message })
}

export function createApp(): Express {
  const app = express()
  app.use(express.json({ limit: '1gb' }))

  app.get('/v1/info', (_req, res) => {
    res.json({ model: MODEL_ID, dim: EMBED_DIM, sample_rate: SAMPLE_RATE })
  })

  app.post('/v1/embed/text', (req, res) => {
    const texts = req.body?.texts
    if (!Array.isArray(texts) || texts.length === 0) {
      return badRequest(res, 'body must contain a non-empty "texts" array')
    }
    if (texts.length > MAX_BATCH) {
      return res.status(413).json({ error: `batch exceeds ${MAX_BATCH} texts` })
    }
    const embeddings: number[][] = []
    for (const text of texts) {
      if (typeof text !== 'string' || text.length === 0) {
        return badRequest(res, 'every entry of "texts" must be a non-empty string')
      }
      embeddings.push(embedText(text))
    }
    res.json({ embeddings })
  })

  app.post('/v1/embed/audio', (req, res) => {
    const { sample_rate: rate, pcm_f32_b64: batch } = req.body ?? {}
    if (!Array.isArray(batch) || batch.length === 0) {
      return badRequest(res, 'body must contain a non-empty "pcm_f32_b64" array')
    }
    if (batch.length > MAX_BATCH) {
      return res.status(413).json({ error: `batch exceeds ${MAX_BATCH} clips` })
    }
    if (rate !== SAMPLE_RATE) {
      return badRequest(res, `sample_rate must be ${SAMPLE_RATE}, got ${rate}`)
    }
    const embeddings: number[][] = []
    for (const b64 of batch) {
      if (typeof b64 !== 'string') {
        return badRequest(res, 'every clip must be a base64 string')
      }
      let raw: Buffer
      try {
        raw = Buffer.from(b64, 'base64')
      } catch {
        return badRequest(res, 'malformed base64 payload')
      }
      // Node's decoder is lenient; verify the payload round-trips.
      if (raw.length === 0 || raw.toString('base64').replace(/=+$/, '') !== b64.replace(/=+$/, '')) {
        return badRequest(res, 'malformed base64 payload')
      }
      if (raw.length % 4 !== 0) {
        return badRequest(res, 'PCM byte length is not a multiple of 4 (float32)')
      }
      const samples = new Float32Array(raw.buffer, raw.byteOffset, raw.length / 4)
      if (samples.length > MAX_SECONDS * SAMPLE_RATE) {
        return badRequest(
          res,
          `clip of ${(samples.length / SAMPLE_RATE).toFixed(2)} s exceeds the ` +
            `${MAX_SECONDS} s limit`,
        )
      }
      try {
        embeddings.push(embedAudio(samples))
      } catch (err) {
        return badRequest(res, (err as Error).message)
      }
    }
    res.json({ embeddings })
  })

  return app
}
