/**
 * The conversation manifest format shared with the graph engine.
 *
 * UTF-8 text, one JSON record per line.  Line 1 is a header declaring the
 * format name, version, and ordered emotion vocabulary; every following
 * non-empty line is one conversation.  Unlike the engine's loader, the
 * parser here tolerates a missing/null `sentiment` field: producing that
 * field is this package's job.
 */

import { readFileSync, writeFileSync } from "node:fs";

import type {
  ConversationRecord,
  ManifestDocument,
  ManifestHeader,
  UtteranceRecord,
} from "./types.js";

export const MANIFEST_FORMAT = "linecon-manifest";
export const MANIFEST_VERSION = 1;
const SPLITS = new Set(["train", "dev", "test"]);

export class ManifestError extends Error {}

function parseUtterance(obj: unknown, where: string): UtteranceRecord {
  if (typeof obj !== "object" || obj === null) {
    throw new ManifestError(`${where}: utterance must be an object`);
  }
  const rec = obj as Record<string, unknown>;
  if (typeof rec.utt_id !== "string" && typeof rec.utt_id !== "number") {
    throw new ManifestError(`${where}: utterance missing utt_id`);
  }
  if (typeof rec.emotion !== "string") {
    throw new ManifestError(`${where}: utterance missing emotion name`);
  }
  if (typeof rec.split !== "string" || !SPLITS.has(rec.split)) {
    throw new ManifestError(`${where}: split must be train|dev|test, got ${JSON.stringify(rec.split)}`);
  }
  let sentiment: number | null = null;
  if (rec.sentiment !== undefined && rec.sentiment !== null) {
    if (typeof rec.sentiment !== "number" || !Number.isInteger(rec.sentiment)) {
      throw new ManifestError(`${where}: sentiment must be an integer`);
    }
    sentiment = rec.sentiment;
  }
  const out: UtteranceRecord = {
    utt_id: String(rec.utt_id),
    emotion: rec.emotion,
    sentiment,
    split: rec.split as UtteranceRecord["split"],
  };
  if (typeof rec.text === "string") out.text = rec.text;
  if (typeof rec.speaker === "string") out.speaker = rec.speaker;
  return out;
}

export function parseManifestText(text: string): ManifestDocument {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) {
    throw new ManifestError("manifest is empty");
  }
  let header: ManifestHeader;
  try {
    header = JSON.parse(lines[0]!) as ManifestHeader;
  } catch (err) {
    throw new ManifestError(`manifest line 1: malformed header: ${String(err)}`);
  }
  if (header.format !== MANIFEST_FORMAT) {
    throw new ManifestError(`manifest line 1: header must declare format "${MANIFEST_FORMAT}"`);
  }
  if (header.version !== MANIFEST_VERSION) {
    throw new ManifestError(`manifest line 1: unsupported version ${header.version}`);
  }
  if (!Array.isArray(header.emotion_vocab) || header.emotion_vocab.length === 0) {
    throw new ManifestError("manifest line 1: emotion_vocab must be a non-empty list");
  }
  const vocab = new Set(header.emotion_vocab);

  const conversations: ConversationRecord[] = [];
  const rawConversationLines: string[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i]!;
    if (line.trim() === "") continue;
    const where = `manifest line ${i + 1}`;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new ManifestError(`${where}: malformed manifest line: ${String(err)}`);
    }
    const rec = obj as Record<string, unknown>;
    if (typeof rec !== "object" || rec === null || rec.conv_id === undefined ||
        !Array.isArray(rec.utterances) || rec.utterances.length === 0) {
      throw new ManifestError(`${where}: conversation record needs conv_id and a non-empty utterances list`);
    }
    const utterances = rec.utterances.map((u) => parseUtterance(u, where));
    for (const u of utterances) {
      if (!vocab.has(u.emotion)) {
        throw new ManifestError(`${where}: unknown emotion name "${u.emotion}"`);
      }
    }
    conversations.push({ conv_id: String(rec.conv_id), utterances });
    rawConversationLines.push(line);
  }
  return {
    header,
    conversations,
    rawConversationLines,
    rawHeaderLine: lines[0]!,
  };
}

export function readManifest(path: string): ManifestDocument {
  return parseManifestText(readFileSync(path, "utf-8"));
}

/** Serialize one conversation the way the engine writes it: utt_id,
 *  text?, speaker?, emotion, sentiment, split. */
export function serializeConversation(conv: ConversationRecord): string {
  const utterances = conv.utterances.map((u) => {
    const rec: Record<string, unknown> = { utt_id: u.utt_id };
    if (u.text !== undefined && u.text !== null) rec.text = u.text;
    if (u.speaker !== undefined && u.speaker !== null) rec.speaker = u.speaker;
    rec.emotion = u.emotion;
    rec.sentiment = u.sentiment ?? null;
    rec.split = u.split;
    return rec;
  });
  return JSON.stringify({ conv_id: conv.conv_id, utterances });
}

/**
 * Write a manifest, reusing the original line text for conversations whose
 * index is not in `modified` so untouched records stay byte-identical.
 */
export function writeManifest(
  path: string,
  doc: ManifestDocument,
  modified?: Set<number>,
): void {
  const lines = [doc.rawHeaderLine];
  doc.conversations.forEach((conv, i) => {
    if (modified === undefined || modified.has(i)) {
      lines.push(serializeConversation(conv));
    } else {
      lines.push(doc.rawConversationLines[i]!);
    }
  });
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

/** Utterances in corpus traversal order (conversations in manifest order,
 *  utterances in temporal order), the global node indexing. */
export function flattenUtterances(doc: ManifestDocument): UtteranceRecord[] {
  return doc.conversations.flatMap((c) => c.utterances);
}
