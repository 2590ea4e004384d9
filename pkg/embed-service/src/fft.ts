/** Iterative radix-2 FFT, enough for power-of-two analysis frames. */

export function fftMagnitudes(signal: Float64Array): Float64Array {
  const n = signal.length
  if ((n & (n - 1)) !== 0) {
    throw new Error(`FFT length must be a power of two, got ${n}`)
  }
  const re = Float64Array.from(signal)
  const im = new Float64Array(n)

  // bit-reversal permutation
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1
    for (; j & bit; bit >>= 1) {
      j ^= bit
    }
    j ^= bit
    if (i < j) {
      ;[re[i], re[j]] = [re[j], re[i]]
      ;[im[i], im[j]] = [im[j], im[i]]
    }
  }

  for (let len = 2; len <= n; len <<= 1) {
    const angle = (-2 * Math.PI) / len
    const wRe = Math.cos(angle)
    const wIm = Math.sin(angle)
    for (let i = 0; i < n; i += len) {
      let curRe = 1
      let curIm = 0
      for (let k = 0; k < len / 2; k++) {
        const a = i + k
        const b = i + k + len / 2
        const tRe = re[b] * curRe - im[b] * curIm
        const tIm = re[b] * curIm + im[b] * curRe
        re[b] = re[a] - tRe
        im[b] = im[a] - tIm
        re[a] += tRe
        im[a] += tIm
        const nextRe = curRe * wRe - curIm * wIm
        curIm = curRe * wIm + curIm * wRe
        curRe = nextRe
      }
    }
  }

  const bins = n / 2 + 1
  const mags = new Float64Array(bins)
  for (let k = 0; k < bins; k++) {
    mags[k] = Math.hypot(re[k], im[k])
  }
  return mags
}
