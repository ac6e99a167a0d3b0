export { INTERCHANGE_TAGS, mapTag, type InterchangeTag } from './tags.js';
export {
  loadTagger,
  mergeHyphenated,
  type RawToken,
  type Tagger,
  type Token,
} from './tagger.js';
export { renderTsv, sanitizeField } from './tsv.js';
export {
  tagCorpus,
  type ConvertConfig,
  type ConvertSummary,
  type FileFailure,
} from './convert.js';
export { main } from './cli.js';
