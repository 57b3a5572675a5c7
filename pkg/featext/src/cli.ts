#!/usr/bin/env node
/**
 * Command-line surface.  Long flag names only, mirroring the engine's
 * conventions.  Exit codes: 0 success, 1 data/model error, 2 usage error.
 *
 *   featext extract-embeddings --manifest in.jsonl --out feats.lcfeat
 *       [--encoder id] [--revision rev] [--batch-size n] [--device d]
 *   featext label-sentiment --manifest in.jsonl --out labeled.jsonl
 *       [--model id] [--revision rev] [--batch-size n] [--overwrite]
 */

import { DEFAULT_ENCODER, DEFAULT_REVISION, extractEmbeddings } from "./extract.js";
import { DEFAULT_SENTIMENT_MODEL, labelSentiment } from "./sentiment.js";
import { writeRunManifest } from "./runmanifest.js";

interface FlagSpec {
  takesValue: boolean;
  required?: boolean;
}

function parseFlags(
  argv: string[],
  spec: Record<string, FlagSpec>,
): Record<string, string | boolean> | { usageError: string } {
  const out: Record<string, string | boolean> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    if (!arg.startsWith("--")) {
      return { usageError: `unexpected argument ${arg}` };
    }
    const name = arg.slice(2);
    const flag = spec[name];
    if (flag === undefined) {
      return { usageError: `unknown flag --${name}` };
    }
    if (flag.takesValue) {
      const value = argv[i + 1];
      if (value === undefined || value.startsWith("--")) {
        return { usageError: `flag --${name} needs a value` };
      }
      out[name] = value;
      i++;
    } else {
      out[name] = true;
    }
  }
  for (const [name, flag] of Object.entries(spec)) {
    if (flag.required && out[name] === undefined) {
      return { usageError: `missing required flag --${name}` };
    }
  }
  return out;
}

const USAGE = `usage:
  featext extract-embeddings --manifest <in.jsonl> --out <features.lcfeat>
      [--encoder <model id>] [--revision <rev>] [--batch-size <n>] [--device <d>]
  featext label-sentiment --manifest <in.jsonl> --out <labeled.jsonl>
      [--model <model id>] [--revision <rev>] [--batch-size <n>] [--overwrite] [--device <d>]
`;

async function cmdExtract(argv: string[]): Promise<number> {
  const started = Date.now();
  const flags = parseFlags(argv, {
    manifest: { takesValue: true, required: true },
    out: { takesValue: true, required: true },
    encoder: { takesValue: true },
    revision: { takesValue: true },
    "batch-size": { takesValue: true },
    device: { takesValue: true },
  });
  if ("usageError" in flags) {
    console.error(`error: ${flags.usageError}\n${USAGE}`);
    return 2;
  }
  const encoder = (flags.encoder as string) ?? DEFAULT_ENCODER;
  const revision = (flags.revision as string) ?? DEFAULT_REVISION;
  try {
    const result = await extractEmbeddings({
      manifestIn: flags.manifest as string,
      outFeatures: flags.out as string,
      encoderId: encoder,
      revision,
      batchSize: flags["batch-size"] ? Number(flags["batch-size"]) : undefined,
      device: flags.device as string | undefined,
    });
    for (const warning of result.warnings) console.error(`warning: ${warning}`);
    writeRunManifest(
      "extract-embeddings",
      { encoder, revision, batch_size: flags["batch-size"] ?? 32 },
      [flags.manifest as string],
      [flags.out as string, result.sidecar],
      started,
    );
    console.log(`wrote ${result.rows}x${result.cols} feature file and sidecar`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

async function cmdLabelSentiment(argv: string[]): Promise<number> {
  const started = Date.now();
  const flags = parseFlags(argv, {
    manifest: { takesValue: true, required: true },
    out: { takesValue: true, required: true },
    model: { takesValue: true },
    revision: { takesValue: true },
    "batch-size": { takesValue: true },
    overwrite: { takesValue: false },
    device: { takesValue: true },
  });
  if ("usageError" in flags) {
    console.error(`error: ${flags.usageError}\n${USAGE}`);
    return 2;
  }
  const model = (flags.model as string) ?? DEFAULT_SENTIMENT_MODEL;
  const revision = (flags.revision as string) ?? DEFAULT_REVISION;
  try {
    const result = await labelSentiment({
      manifestIn: flags.manifest as string,
      manifestOut: flags.out as string,
      modelId: model,
      revision,
      batchSize: flags["batch-size"] ? Number(flags["batch-size"]) : undefined,
      overwrite: flags.overwrite === true,
    });
    writeRunManifest(
      "label-sentiment",
      { model, revision, overwrite: flags.overwrite === true },
      [flags.manifest as string],
      [flags.out as string],
      started,
    );
    console.log(`labeled ${result.labeled} utterances, kept ${result.kept}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

export async function run(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  switch (command) {
    case "extract-embeddings":
      return cmdExtract(rest);
    case "label-sentiment":
      return cmdLabelSentiment(rest);
    case "--help":
    case "help":
      console.log(USAGE);
      return 0;
    default:
      console.error(`error: unknown command ${command ?? "(none)"}\n${USAGE}`);
      return 2;
  }
}

const isMain = import.meta.url === `file://${process.argv[1]}`;
if (isMain) {
  run(process.argv.slice(2)).then((code) => process.exit(code));
}
