import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // the acceptance suite builds fixtures and boots the review server
    testTimeout: 30_000,
    hookTimeout: 180_000,
  },
});
