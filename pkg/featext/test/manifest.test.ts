import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import {
  ManifestError,
  flattenUtterances,
  parseManifestText,
  readManifest,
  writeManifest,
} from "../src/manifest.js";
import {
  manifestText,
  sampleConversations,
  tempDir,
  writeManifestFile,
} from "./helpers.js";

describe("parsing", () => {
  it("reads header and conversations in order", () => {
    const doc = parseManifestText(manifestText(sampleConversations()));
    expect(doc.header.emotion_vocab).toEqual(["anger", "joy", "neutral"]);
    expect(doc.conversations.map((c) => c.conv_id)).toEqual(["c1", "c2"]);
    expect(flattenUtterances(doc).map((u) => u.utt_id)).toEqual(["u1", "u2", "u3"]);
  });

  it("tolerates missing sentiment (this tool's output fills it)", () => {
    const convs = sampleConversations();
    delete convs[0]!.utterances[0]!.sentiment;
    const doc = parseManifestText(manifestText(convs));
    expect(doc.conversations[0]!.utterances[0]!.sentiment).toBeNull();
  });

  it("reports the failing line number", () => {
    const text = manifestText(sampleConversations());
    const broken = text.replace('{"conv_id":"c2"', '{"conv_id":"c2"!!');
    expect(() => parseManifestText(broken)).toThrow(/manifest line 3/);
  });

  it("rejects unknown emotion names", () => {
    const convs = sampleConversations();
    convs[1]!.utterances[0]!.emotion = "melancholy";
    expect(() => parseManifestText(manifestText(convs))).toThrow(
      /unknown emotion name "melancholy"/);
  });

  it("rejects wrong format, version, and empty vocabulary", () => {
    const good = manifestText(sampleConversations());
    expect(() => parseManifestText(good.replace("linecon-manifest", "other")))
      .toThrow(ManifestError);
    expect(() => parseManifestText(good.replace('"version":1', '"version":9')))
      .toThrow(/version/);
    expect(() => parseManifestText(good.replace('["anger","joy","neutral"]', "[]")))
      .toThrow(/emotion_vocab/);
  });

  it("rejects conversations without utterances", () => {
    const text = manifestText([{ conv_id: "c1", utterances: [] }]);
    expect(() => parseManifestText(text)).toThrow(/non-empty utterances/);
  });

  it("accepts a header-only manifest", () => {
    const doc = parseManifestText(manifestText([]));
    expect(doc.conversations).toHaveLength(0);
  });
});

describe("writing", () => {
  it("round-trips unmodified documents byte-identically", () => {
    const dir = tempDir();
    const text = manifestText(sampleConversations());
    const inPath = writeManifestFile(dir, text);
    const doc = readManifest(inPath);
    const outPath = join(dir, "out.jsonl");
    writeManifest(outPath, doc, new Set());
    expect(readFileSync(outPath, "utf-8")).toBe(text);
  });

  it("re-serializes only the modified conversations", () => {
    const dir = tempDir();
    const inPath = writeManifestFile(dir, manifestText(sampleConversations()));
    const doc = readManifest(inPath);
    doc.conversations[1]!.utterances[0]!.sentiment = 2;
    const outPath = join(dir, "out.jsonl");
    writeManifest(outPath, doc, new Set([1]));
    const lines = readFileSync(outPath, "utf-8").trim().split("\n");
    expect(lines[1]).toBe(doc.rawConversationLines[0]);
    expect(JSON.parse(lines[2]!).utterances[0].sentiment).toBe(2);
    // the rewritten file still parses under the same contract
    expect(() => readManifest(outPath)).not.toThrow();
  });
});
