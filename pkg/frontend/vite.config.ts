import { defineConfig } from 'vitest/config';

export default defineConfig({
  // served by the backend under /ui/
  base: '/ui/',
  build: {
    outDir: 'dist',
  },
  server: {
    proxy: {
      '/api': 'http://127.0.0.1:8700',
      '/healthz': 'http://127.0.0.1:8700',
    },
  },
  test: {
    environment: 'node',
  },
});
