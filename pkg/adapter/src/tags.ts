// The miner's reader accepts exactly these tags and folds anything else to X,
// so we map eagerly on our side and never emit a surprise.
export const INTERCHANGE_TAGS = [
  'NOUN',
  'VERB',
  'ADJ',
  'ADV',
  'ADP',
  'DET',
  'PRON',
  'PART',
  'NUM',
  'CONJ',
  'PRT',
  'X',
  'PUNCT',
] as const;

export type InterchangeTag = (typeof INTERCHANGE_TAGS)[number];

const DIRECT = new Set<string>(INTERCHANGE_TAGS);

// Collapse the tagger's finer UPOS distinctions onto the coarse set.
const FOLDED: Record<string, InterchangeTag> = {
  PROPN: 'NOUN',
  AUX: 'VERB',
  CCONJ: 'CONJ',
  SCONJ: 'CONJ',
  INTJ: 'X',
  SYM: 'X',
  SPACE: 'X',
};

export function mapTag(upos: string): InterchangeTag {
  if (DIRECT.has(upos)) return upos as InterchangeTag;
  return FOLDED[upos] ?? 'X';
}
