/**
 * 3-way sentiment labeling for manifests that lack it.
 *
 * Every utterance without a sentiment gains the argmax label of the
 * classifier, coded 0=negative, 1=neutral, 2=positive; existing labels
 * are preserved unless overwrite is set.  Conversations that end up
 * unmodified are passed through byte-identically.  The default classifier
 * is a transformers.js text-classification pipeline; tests inject fakes.
 */

import { copyFileSync } from "node:fs";

import { readManifest, writeManifest } from "./manifest.js";
import type { SentimentClassifier, SentimentPrediction } from "./types.js";

export const DEFAULT_SENTIMENT_MODEL = "Xenova/twitter-roberta-base-sentiment-latest";
export const DEFAULT_REVISION = "main";

export const SENTIMENT_CODES: Record<string, number> = {
  negative: 0,
  neutral: 1,
  positive: 2,
  // some checkpoints emit bare index labels in this order
  label_0: 0,
  label_1: 1,
  label_2: 2,
};

export class SentimentError extends Error {}

export function sentimentCode(label: string): number {
  const code = SENTIMENT_CODES[label.toLowerCase()];
  if (code === undefined) {
    throw new SentimentError(`classifier produced unknown sentiment label "${label}"`);
  }
  return code;
}

export async function transformersClassifier(
  modelId: string,
  revision: string,
  device?: string,
): Promise<SentimentClassifier> {
  const { pipeline } = await import("@huggingface/transformers");
  const options: Record<string, unknown> = { revision };
  if (device) options.device = device;
  const classifier = await pipeline("text-classification", modelId, options);
  return {
    async classify(texts: string[]): Promise<SentimentPrediction[]> {
      const output = await classifier(texts, { top_k: 1 });
      return (output as Array<SentimentPrediction | SentimentPrediction[]>).map(
        (item) => (Array.isArray(item) ? item[0]! : item));
    },
  };
}

export interface SentimentJob {
  manifestIn: string;
  manifestOut: string;
  modelId?: string;
  revision?: string;
  batchSize?: number;
  overwrite?: boolean;
  device?: string;
}

export interface SentimentResult {
  labeled: number;
  kept: number;
}

export async function labelSentiment(
  job: SentimentJob,
  classifier?: SentimentClassifier,
): Promise<SentimentResult> {
  const doc = readManifest(job.manifestIn);

  const targets: Array<{ conv: number; utt: number; text: string }> = [];
  let kept = 0;
  doc.conversations.forEach((conv, ci) => {
    conv.utterances.forEach((u, ui) => {
      const needs = job.overwrite === true ||
        u.sentiment === undefined || u.sentiment === null;
      if (!needs) {
        kept += 1;
        return;
      }
      if (u.text === undefined || u.text === null) {
        throw new SentimentError(
          `utterance ${u.utt_id} has no text; cannot classify its sentiment`);
      }
      targets.push({ conv: ci, utt: ui, text: u.text });
    });
  });

  if (targets.length === 0) {
    // nothing to label: the output is the input, byte for byte
    copyFileSync(job.manifestIn, job.manifestOut);
    return { labeled: 0, kept };
  }

  if (classifier === undefined) {
    classifier = await transformersClassifier(
      job.modelId ?? DEFAULT_SENTIMENT_MODEL,
      job.revision ?? DEFAULT_REVISION,
      job.device,
    );
  }
  const modified = new Set<number>();
  const batchSize = job.batchSize ?? 32;
  for (let start = 0; start < targets.length; start += batchSize) {
    const batch = targets.slice(start, start + batchSize);
    const predictions = await classifier.classify(batch.map((t) => t.text));
    if (predictions.length !== batch.length) {
      throw new SentimentError(
        `classifier returned ${predictions.length} labels for a batch of ${batch.length}`);
    }
    batch.forEach((target, i) => {
      const code = sentimentCode(predictions[i]!.label);
      doc.conversations[target.conv]!.utterances[target.utt]!.sentiment = code;
      modified.add(target.conv);
    });
  }

  writeManifest(job.manifestOut, doc, modified);
  return { labeled: targets.length, kept };
}
