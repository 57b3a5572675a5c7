/** Shared record shapes and the injectable model interfaces. */

export type Split = "train" | "dev" | "test";

export interface UtteranceRecord {
  utt_id: string;
  text?: string | null;
  speaker?: string | null;
  /** Emotion label name from the manifest header vocabulary. */
  emotion: string;
  /** 0=negative, 1=neutral, 2=positive; null/absent until labeled. */
  sentiment?: number | null;
  split: Split;
}

export interface ConversationRecord {
  conv_id: string;
  utterances: UtteranceRecord[];
}

export interface ManifestHeader {
  format: string;
  version: number;
  emotion_vocab: string[];
}

export interface ManifestDocument {
  header: ManifestHeader;
  conversations: ConversationRecord[];
  /** Original line text per conversation (index-aligned), enabling
   *  byte-identical passthrough of unmodified records. */
  rawConversationLines: string[];
  rawHeaderLine: string;
}

/** Turns a batch of texts into one embedding row per text. */
export interface EmbeddingExtractor {
  embed(texts: string[]): Promise<number[][]>;
}

export interface SentimentPrediction {
  label: string;
  score: number;
}

/** Returns the top predicted sentiment label per text. */
export interface SentimentClassifier {
  classify(texts: string[]): Promise<SentimentPrediction[]>;
}
