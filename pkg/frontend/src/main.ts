// Browser bootstrap: real fetch, real AudioContext, same-origin service.

import { ApiClient } from './api';
import { WebAudioPlayer } from './audio';
import { App } from './app';

const ctx = new AudioContext();
const app = new App({
  doc: document,
  api: new ApiClient(''),
  player: new WebAudioPlayer(ctx),
});

document.addEventListener('click', () => {
  // browsers gate audio behind a user gesture
  if (ctx.state === 'suspended') void ctx.resume();
}, { once: true });

app.mount(document.getElementById('app')!);
