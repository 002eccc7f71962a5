import { Api } from './api.js';
import { mountApp } from './app.js';

const root = document.getElementById('app');
if (root) {
  const reviewer =
    new URLSearchParams(window.location.search).get('reviewer') ?? 'reviewer';
  mountApp(root, new Api(''), reviewer);
}
