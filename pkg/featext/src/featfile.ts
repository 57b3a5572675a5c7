/**
 * LCFEAT01 feature files and their alignment sidecars.
 *
 * Layout (little-endian): 8-byte magic "LCFEAT01", rows u32, cols u32,
 * then rows*cols IEEE-754 float32 row-major.  The sidecar written next to
 * a feature file records the sha256 of the feature bytes followed by the
 * utterance ids in row order, so consumers can verify that row i really
 * belongs to utterance i.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

export const FEATURE_MAGIC = "LCFEAT01";

export class FeatureFileError extends Error {}

export function encodeFeatureFile(rows: number[][]): Buffer {
  const nRows = rows.length;
  const nCols = nRows > 0 ? rows[0]!.length : 0;
  const buf = Buffer.alloc(16 + nRows * nCols * 4);
  buf.write(FEATURE_MAGIC, 0, "ascii");
  buf.writeUInt32LE(nRows, 8);
  buf.writeUInt32LE(nCols, 12);
  let off = 16;
  for (let r = 0; r < nRows; r++) {
    const row = rows[r]!;
    if (row.length !== nCols) {
      throw new FeatureFileError(
        `row ${r} has ${row.length} values, expected ${nCols}`);
    }
    for (let c = 0; c < nCols; c++) {
      buf.writeFloatLE(row[c]!, off);
      off += 4;
    }
  }
  return buf;
}

export function writeFeatureFile(path: string, rows: number[][]): void {
  writeFileSync(path, encodeFeatureFile(rows));
}

export function readFeatureFile(path: string): { rows: number; cols: number; data: Float32Array } {
  const buf = readFileSync(path);
  if (buf.length < 16 || buf.toString("ascii", 0, 8) !== FEATURE_MAGIC) {
    throw new FeatureFileError(`${path}: bad magic, expected ${FEATURE_MAGIC}`);
  }
  const rows = buf.readUInt32LE(8);
  const cols = buf.readUInt32LE(12);
  const expected = 16 + rows * cols * 4;
  if (buf.length !== expected) {
    throw new FeatureFileError(
      `${path}: payload is ${buf.length - 16} bytes, header says ${rows}x${cols}`);
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = buf.readFloatLE(16 + i * 4);
  }
  return { rows, cols, data };
}

export function sha256Hex(data: Buffer): string {
  return createHash("sha256").update(data).digest("hex");
}

export function sidecarPath(featurePath: string): string {
  return featurePath + ".ids.txt";
}

/** Write "<sha256 of feature bytes>" then one utt_id per line. */
export function writeSidecar(featurePath: string, uttIds: string[]): string {
  const digest = sha256Hex(readFileSync(featurePath));
  const path = sidecarPath(featurePath);
  writeFileSync(path, ["sha256:" + digest, ...uttIds].join("\n") + "\n", "utf-8");
  return path;
}

export function verifySidecar(featurePath: string): { ok: boolean; uttIds: string[]; reason?: string } {
  const lines = readFileSync(sidecarPath(featurePath), "utf-8").split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  const recorded = lines[0] ?? "";
  const uttIds = lines.slice(1);
  const actual = "sha256:" + sha256Hex(readFileSync(featurePath));
  if (recorded !== actual) {
    return { ok: false, uttIds, reason: "feature file digest mismatch" };
  }
  const { rows } = readFeatureFile(featurePath);
  if (uttIds.length !== rows) {
    return { ok: false, uttIds, reason: `sidecar lists ${uttIds.length} ids for ${rows} rows` };
  }
  return { ok: true, uttIds };
}
