import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    // every tagCorpus call loads the language model fresh
    testTimeout: 20_000,
  },
});
