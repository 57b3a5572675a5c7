/**
 * Utterance embedding extraction.
 *
 * One feature row per utterance, in corpus traversal order, written as an
 * LCFEAT01 file plus an alignment sidecar.  The default extractor runs a
 * pretrained encoder through transformers.js in inference mode with
 * first-token (cls) pooling and no normalization; any EmbeddingExtractor
 * can be injected instead, which is how the tests stay offline.
 */

import { flattenUtterances, readManifest } from "./manifest.js";
import { writeFeatureFile, writeSidecar } from "./featfile.js";
import type { EmbeddingExtractor, UtteranceRecord } from "./types.js";

export const DEFAULT_ENCODER = "tae898/emoberta-base";
export const DEFAULT_REVISION = "main";

export interface ExtractionJob {
  manifestIn: string;
  outFeatures: string;
  encoderId?: string;
  revision?: string;
  batchSize?: number;
  device?: string;
}

export class ExtractionError extends Error {}

/** Lazily constructed transformers.js feature-extraction pipeline. */
export async function transformersExtractor(
  encoderId: string,
  revision: string,
  device?: string,
): Promise<EmbeddingExtractor> {
  const { pipeline } = await import("@huggingface/transformers");
  const options: Record<string, unknown> = { revision };
  if (device) options.device = device;
  const extractor = await pipeline("feature-extraction", encoderId, options);
  return {
    async embed(texts: string[]): Promise<number[][]> {
      const output = await extractor(texts, { pooling: "cls", normalize: false });
      return output.tolist() as number[][];
    },
  };
}

export interface ExtractionResult {
  rows: number;
  cols: number;
  sidecar: string;
  warnings: string[];
}

export async function extractEmbeddings(
  job: ExtractionJob,
  extractor?: EmbeddingExtractor,
): Promise<ExtractionResult> {
  const doc = readManifest(job.manifestIn);
  const utterances = flattenUtterances(doc);
  const warnings: string[] = [];

  const texts: string[] = [];
  for (const u of utterances) {
    if (u.text === undefined || u.text === null) {
      throw new ExtractionError(
        `utterance ${u.utt_id} has no text; embeddings need the text field`);
    }
    if (u.text === "") {
      warnings.push(`utterance ${u.utt_id} has empty text; embedding the empty sequence`);
    }
    texts.push(u.text);
  }

  if (extractor === undefined) {
    extractor = await transformersExtractor(
      job.encoderId ?? DEFAULT_ENCODER,
      job.revision ?? DEFAULT_REVISION,
      job.device,
    );
  }

  const batchSize = job.batchSize ?? 32;
  const rows: number[][] = [];
  for (let start = 0; start < texts.length; start += batchSize) {
    const batch = texts.slice(start, start + batchSize);
    const vectors = await extractor.embed(batch);
    if (vectors.length !== batch.length) {
      throw new ExtractionError(
        `extractor returned ${vectors.length} rows for a batch of ${batch.length}`);
    }
    rows.push(...vectors);
  }

  const cols = rows.length > 0 ? rows[0]!.length : 0;
  for (const [i, row] of rows.entries()) {
    if (row.length !== cols) {
      throw new ExtractionError(
        `embedding dim changed mid-run: row ${i} has ${row.length}, expected ${cols}`);
    }
  }

  writeFeatureFile(job.outFeatures, rows);
  const sidecar = writeSidecar(job.outFeatures, utterances.map((u: UtteranceRecord) => u.utt_id));
  return { rows: rows.length, cols, sidecar, warnings };
}
