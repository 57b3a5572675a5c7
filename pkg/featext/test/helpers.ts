import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type {
  ConversationRecord,
  EmbeddingExtractor,
  SentimentClassifier,
} from "../src/types.js";

export function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "featext-"));
}

export function manifestText(
  conversations: ConversationRecord[],
  vocab: string[] = ["anger", "joy", "neutral"],
): string {
  const header = JSON.stringify({
    format: "linecon-manifest",
    version: 1,
    emotion_vocab: vocab,
  });
  return [header, ...conversations.map((c) => JSON.stringify(c))].join("\n") + "\n";
}

export function writeManifestFile(dir: string, text: string, name = "in.jsonl"): string {
  const path = join(dir, name);
  writeFileSync(path, text, "utf-8");
  return path;
}

export function sampleConversations(): ConversationRecord[] {
  return [
    {
      conv_id: "c1",
      utterances: [
        { utt_id: "u1", text: "What a day.", emotion: "joy", sentiment: 2, split: "train" },
        { utt_id: "u2", text: "Tell me.", emotion: "neutral", sentiment: 1, split: "train" },
      ],
    },
    {
      conv_id: "c2",
      utterances: [
        { utt_id: "u3", text: "This is bad.", emotion: "anger", sentiment: 0, split: "test" },
      ],
    },
  ];
}

/** Deterministic embeddings derived from character codes: row i encodes
 *  (text length, sum of codes, first code, constant) scaled small. */
export function fakeExtractor(dim = 4): EmbeddingExtractor {
  return {
    async embed(texts: string[]): Promise<number[][]> {
      return texts.map((t) => {
        const codes = Array.from(t).map((ch) => ch.charCodeAt(0));
        const sum = codes.reduce((a, b) => a + b, 0);
        const row = [t.length, sum / 100, codes[0] ?? 0, 1];
        while (row.length < dim) row.push(row.length);
        return row.slice(0, dim).map((v) => v / 8);
      });
    },
  };
}

/** Keyword-rule classifier standing in for the pretrained model. */
export function fakeClassifier(): SentimentClassifier {
  return {
    async classify(texts) {
      return texts.map((t) => {
        const lower = t.toLowerCase();
        if (lower.includes("hate") || lower.includes("bad")) {
          return { label: "negative", score: 0.97 };
        }
        if (lower.includes("love") || lower.includes("great")) {
          return { label: "positive", score: 0.95 };
        }
        return { label: "neutral", score: 0.6 };
      });
    },
  };
}
