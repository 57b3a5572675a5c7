export {
  MANIFEST_FORMAT,
  MANIFEST_VERSION,
  ManifestError,
  flattenUtterances,
  parseManifestText,
  readManifest,
  serializeConversation,
  writeManifest,
} from "./manifest.js";
export {
  FEATURE_MAGIC,
  FeatureFileError,
  encodeFeatureFile,
  readFeatureFile,
  sidecarPath,
  verifySidecar,
  writeFeatureFile,
  writeSidecar,
} from "./featfile.js";
export {
  DEFAULT_ENCODER,
  ExtractionError,
  extractEmbeddings,
  transformersExtractor,
} from "./extract.js";
export {
  DEFAULT_SENTIMENT_MODEL,
  SENTIMENT_CODES,
  SentimentError,
  labelSentiment,
  sentimentCode,
  transformersClassifier,
} from "./sentiment.js";
export { writeRunManifest } from "./runmanifest.js";
export type {
  ConversationRecord,
  EmbeddingExtractor,
  ManifestDocument,
  SentimentClassifier,
  SentimentPrediction,
  Split,
  UtteranceRecord,
} from "./types.js";
