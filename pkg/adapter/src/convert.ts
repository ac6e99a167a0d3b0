import { mkdir, readdir, readFile, stat, writeFile } from 'node:fs/promises';
import path from 'node:path';

import { loadTagger } from './tagger.js';
import { renderTsv } from './tsv.js';

export interface ConvertConfig {
  input: string; // one text file, or a directory of them
  output: string; // directory for the .tsv files; must differ from input
  model?: string;
  batchSize?: number; // files tagged concurrently
}

export interface FileFailure {
  file: string;
  message: string;
}

export interface ConvertSummary {
  docs: number;
  sentences: number;
  tokens: number;
  written: string[];
  failures: FileFailure[];
}

function docIdFor(file: string): string {
  const base = path.basename(file);
  const dot = base.lastIndexOf('.');
  return dot > 0 ? base.slice(0, dot) : base;
}

async function listInputs(input: string): Promise<string[]> {
  const info = await stat(input);
  if (info.isFile()) return [input];
  const entries = await readdir(input, { withFileTypes: true });
  return entries
    .filter((e) => e.isFile())
    .map((e) => path.join(input, e.name))
    .sort();
}

/**
 * Tag every input file and write one interchange TSV per document.
 *
 * A file that fails (not valid UTF-8, unreadable, output name taken by an
 * earlier input) is reported in the summary and skipped; the rest proceed.
 */
export async function tagCorpus(config: ConvertConfig): Promise<ConvertSummary> {
  const input = path.resolve(config.input);
  const output = path.resolve(config.output);
  if (input === output) {
    throw new Error('output directory must be different from the input');
  }

  const files = await listInputs(input);
  await mkdir(output, { recursive: true });

  const tagger = loadTagger(config.model);
  const header = [
    `tagged by actmine-adapter (wink-nlp ${tagger.engineVersion})`,
    `model: ${tagger.modelName} ${tagger.modelVersion}`,
  ];

  const summary: ConvertSummary = {
    docs: 0,
    sentences: 0,
    tokens: 0,
    written: [],
    failures: [],
  };
  const decoder = new TextDecoder('utf-8', { fatal: true });
  const claimed = new Map<string, string>();

  const tagOne = async (file: string): Promise<void> => {
    const docId = docIdFor(file);
    const owner = claimed.get(docId);
    if (owner !== file) {
      summary.failures.push({
        file,
        message: `output name "${docId}.tsv" already produced from ${owner}`,
      });
      return;
    }
    let text: string;
    try {
      text = decoder.decode(await readFile(file));
    } catch (err) {
      summary.failures.push({ file, message: `not readable as UTF-8: ${err}` });
      return;
    }
    const sentences = tagger.tagText(text);
    const dest = path.join(output, `${docId}.tsv`);
    await writeFile(dest, renderTsv(docId, sentences, header), 'utf-8');
    summary.docs += 1;
    summary.sentences += sentences.length;
    summary.tokens += sentences.reduce((n, s) => n + s.length, 0);
    summary.written.push(dest);
  };

  for (const file of files) {
    if (!claimed.has(docIdFor(file))) claimed.set(docIdFor(file), file);
  }
  const batch = Math.max(1, config.batchSize ?? 4);
  for (let i = 0; i < files.length; i += batch) {
    await Promise.all(files.slice(i, i + batch).map(tagOne));
  }
  summary.written.sort();
  summary.failures.sort((a, b) => a.file.localeCompare(b.file));
  return summary;
}
