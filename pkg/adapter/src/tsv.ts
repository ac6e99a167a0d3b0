import type { Token } from './tagger.js';

// The TSV reader treats tab and newline as structure; a field containing
// either would corrupt the row, so squash them to plain spaces.
export function sanitizeField(value: string): string {
  return value.replace(/[\t\r\n]+/g, ' ').trim();
}

/**
 * Render one tagged document as interchange TSV.
 *
 * Columns: doc_id, sent_id, token_idx, surface, lemma, pos. Both ids count
 * from zero and token_idx runs contiguously across the whole document.
 * Header comments (# ...) carry provenance and are skipped by readers.
 */
export function renderTsv(
  docId: string,
  sentences: Token[][],
  headerComments: string[] = [],
): string {
  const lines: string[] = headerComments.map((c) => `# ${c}`);
  const doc = sanitizeField(docId);
  let tokenIdx = 0;
  sentences.forEach((sentence, sentId) => {
    for (const token of sentence) {
      lines.push(
        [
          doc,
          String(sentId),
          String(tokenIdx),
          sanitizeField(token.surface),
          sanitizeField(token.lemma),
          token.pos,
        ].join('\t'),
      );
      tokenIdx += 1;
    }
  });
  return lines.join('\n') + '\n';
}
