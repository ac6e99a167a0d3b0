import { createRequire } from 'node:module';

import { mapTag, type InterchangeTag } from './tags.js';

const require_ = createRequire(import.meta.url);

export interface Token {
  surface: string;
  lemma: string;
  pos: InterchangeTag;
}

// Raw view of one tagger token, before hyphen merging and tag folding.
export interface RawToken {
  value: string;
  lemma: string;
  upos: string;
  kind: string;
  glued: boolean; // no whitespace between this token and the previous one
}

/**
 * Rejoin hyphenated compounds that the tokenizer split apart.
 *
 * "seat-belt" comes out as three tokens (seat, -, belt) with no space
 * between them; a chain like "state-of-the-art" alternates the same way.
 * A spaced hyphen ("seat - belt") is punctuation and stays split.
 */
export function mergeHyphenated(tokens: RawToken[]): RawToken[] {
  const out: RawToken[] = [];
  let i = 0;
  while (i < tokens.length) {
    const head = tokens[i];
    let j = i;
    while (
      head.kind === 'word' &&
      j + 2 < tokens.length &&
      tokens[j + 1].value === '-' &&
      tokens[j + 1].glued &&
      tokens[j + 2].glued &&
      tokens[j + 2].kind === 'word'
    ) {
      j += 2;
    }
    if (j > i) {
      const parts = [];
      for (let p = i; p <= j; p += 2) parts.push(tokens[p]);
      const last = parts[parts.length - 1];
      out.push({
        value: parts.map((t) => t.value).join('-'),
        lemma: parts.map((t) => t.lemma).join('-').toLowerCase(),
        upos: last.upos,
        kind: 'word',
        glued: head.glued,
      });
      i = j + 1;
    } else {
      out.push(head);
      i += 1;
    }
  }
  return out;
}

export interface Tagger {
  modelName: string;
  modelVersion: string;
  engineVersion: string;
  tagText(text: string): Token[][];
}

/** Load the tagging model once; returns a reusable sentence tagger. */
export function loadTagger(modelName = 'wink-eng-lite-web-model'): Tagger {
  const winkNLP = require_('wink-nlp');
  let model: unknown;
  try {
    model = require_(modelName);
  } catch {
    throw new Error(
      `language model "${modelName}" is not installed; run: npm install ${modelName}`,
    );
  }
  const nlp = winkNLP(model);
  const its = nlp.its;

  const tagText = (text: string): Token[][] => {
    const doc = nlp.readDoc(text);
    const sentences: Token[][] = [];
    doc.sentences().each((sentence: any) => {
      const raw: RawToken[] = [];
      sentence.tokens().each((t: any) => {
        const value = t.out(its.value);
        if (value.trim() === '') return; // whitespace tokens carry nothing
        raw.push({
          value,
          lemma: t.out(its.lemma),
          upos: t.out(its.pos),
          kind: t.out(its.type),
          glued: t.out(its.precedingSpaces) === '',
        });
      });
      const merged = mergeHyphenated(raw).map((t) => ({
        surface: t.value,
        lemma: (t.lemma || t.value).toLowerCase(),
        pos: mapTag(t.upos),
      }));
      if (merged.length > 0) sentences.push(merged);
    });
    return sentences;
  };

  return {
    modelName,
    modelVersion: require_(`${modelName}/package.json`).version,
    engineVersion: require_('wink-nlp/package.json').version,
    tagText,
  };
}
