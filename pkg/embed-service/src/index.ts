import { createApp } from './server.js'
import { MODEL_ID } from './encoders.js'

const port = Number(process.env.PORT ?? 8350)
createApp().listen(port, () => {
  console.log(`embed-service (${MODEL_ID}) listening on :${port}`)
})
