/** Replay manifests mirroring the engine's convention: every command that
 *  writes outputs leaves a `<first output>.run.json` naming its inputs by
 *  digest, the resolved configuration (pinned model revision included),
 *  and timing. */

import { readFileSync, writeFileSync } from "node:fs";

import { sha256Hex } from "./featfile.js";

export const TOOL_VERSION = "0.1.0";

export interface RunManifest {
  command: string;
  config: Record<string, unknown>;
  inputs: Record<string, string>;
  outputs: string[];
  tool_version: string;
  started_utc: string;
  wall_clock_s: number;
}

export function writeRunManifest(
  command: string,
  config: Record<string, unknown>,
  inputs: string[],
  outputs: string[],
  startedMs: number,
): string {
  const manifest: RunManifest = {
    command,
    config,
    inputs: Object.fromEntries(
      inputs.map((p) => [p, "sha256:" + sha256Hex(readFileSync(p))])),
    outputs,
    tool_version: TOOL_VERSION,
    started_utc: new Date(startedMs).toISOString(),
    wall_clock_s: (Date.now() - startedMs) / 1000,
  };
  const path = outputs[0] + ".run.json";
  writeFileSync(path, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return path;
}
