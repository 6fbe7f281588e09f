/**
 * Feature CSV writer/reader. Schema shared with the evaluation pipeline:
 * header `nodule_id,<columns...>`, one row per nodule, float cells.
 */
import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

function quote(cell: string): string {
  if (/[",\n\r]/.test(cell)) {
    return `"${cell.replace(/"/g, '""')}"`;
  }
  return cell;
}

/** Write atomically (temp + rename) so readers never see a partial file. */
export function atomicWrite(file: string, text: string): void {
  const tmp = path.join(path.dirname(file), `.${path.basename(file)}.tmp`);
  fs.writeFileSync(tmp, text);
  fs.renameSync(tmp, file);
}

export function writeFeatureCsv(file: string, columns: string[],
                                ids: string[], rows: number[][]): void {
  if (rows.length !== ids.length) {
    throw new Error(`row count ${rows.length} != id count ${ids.length}`);
  }
  const lines = [["nodule_id", ...columns].map(quote).join(",")];
  ids.forEach((id, i) => {
    if (rows[i].length !== columns.length) {
      throw new Error(`row ${id} has ${rows[i].length} cells, want ${columns.length}`);
    }
    lines.push([quote(id), ...rows[i].map((v) => String(v))].join(","));
  });
  atomicWrite(file, lines.join("\n") + "\n");
}

export interface FeatureCsv {
  columns: string[];
  ids: string[];
  rows: number[][];
}

export function readFeatureCsv(file: string): FeatureCsv {
  const parsed = Papa.parse<string[]>(fs.readFileSync(file, "utf-8").trim(),
                                      { skipEmptyLines: true });
  const [header, ...body] = parsed.data;
  if (!header || header[0] !== "nodule_id") {
    throw new Error(`${file}: first header cell must be nodule_id`);
  }
  const columns = header.slice(1);
  const ids: string[] = [];
  const rows: number[][] = [];
  for (const cells of body) {
    if (cells.length !== header.length) {
      throw new Error(`${file}: ragged row for ${cells[0]}`);
    }
    ids.push(cells[0]);
    rows.push(cells.slice(1).map(Number));
  }
  return { columns, ids, rows };
}
