import { parseArgs } from 'node:util';

import { tagCorpus } from './convert.js';

const USAGE = `usage: actmine-tag tag --in PATH --out DIR [--model NAME] [--batch N]

Tag raw UTF-8 text (a file or a directory of files) into the tagged-token
TSV corpus format, one .tsv per input document.`;

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== 'tag') {
    console.error(USAGE);
    return 1;
  }
  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        in: { type: 'string' },
        out: { type: 'string' },
        model: { type: 'string' },
        batch: { type: 'string', default: '4' },
      },
    });
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 1;
  }
  const { in: input, out: output, model, batch } = parsed.values;
  const batchSize = Number(batch);
  if (!input || !output || !Number.isInteger(batchSize) || batchSize < 1) {
    console.error(USAGE);
    return 1;
  }

  try {
    const summary = await tagCorpus({ input, output, model, batchSize });
    console.log(
      `tagged ${summary.docs} documents (${summary.sentences} sentences, ` +
        `${summary.tokens} tokens) into ${output}`,
    );
    for (const failure of summary.failures) {
      console.error(`skipped ${failure.file}: ${failure.message}`);
    }
    return summary.failures.length > 0 ? 2 : 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
}
