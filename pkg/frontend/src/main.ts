/** DOM wiring: one human plays both sides; incoming turns fetch chips. */

import { fetchHealth, fetchSuggestions } from './api.js';
import {
  acceptSuggestion,
  applyFetchError,
  applySuggestions,
  sendAsMe,
  sendAsOther,
} from './state.js';
import { initialState, UiState } from './types.js';

let state: UiState = initialState();

const transcriptEl = document.getElementById('transcript') as HTMLDivElement;
const chipsEl = document.getElementById('chips') as HTMLDivElement;
const bannerEl = document.getElementById('banner') as HTMLDivElement;
const inputEl = document.getElementById('input') as HTMLInputElement;
const sendOtherBtn = document.getElementById('send-other') as HTMLButtonElement;
const sendMeBtn = document.getElementById('send-me') as HTMLButtonElement;
const statusEl = document.getElementById('status') as HTMLSpanElement;

function render(): void {
  transcriptEl.replaceChildren(
    ...state.transcript.map((turn) => {
      const row = document.createElement('div');
      row.className = `turn ${turn.sender}${turn.acceptedSuggestion ? ' accepted' : ''}`;
      const bubble = document.createElement('div');
      bubble.className = 'bubble';
      bubble.textContent = turn.text;
      if (turn.acceptedSuggestion) {
        const badge = document.createElement('span');
        badge.className = 'badge';
        badge.textContent = 'suggested';
        bubble.appendChild(badge);
      }
      row.appendChild(bubble);
      return row;
    }),
  );
  transcriptEl.scrollTop = transcriptEl.scrollHeight;

  chipsEl.replaceChildren(
    ...state.pendingSuggestions.map((sugg, i) => {
      const chip = document.createElement('button');
      chip.className = 'chip';
      chip.textContent = sugg.text;
      chip.title = `score ${sugg.score.toFixed(4)}, intent ${sugg.intent_id}`;
      chip.addEventListener('click', () => {
        state = acceptSuggestion(state, i);
        render();
        inputEl.focus();
      });
      return chip;
    }),
  );
  if (state.fetchInflight) {
    const spinner = document.createElement('span');
    spinner.className = 'thinking';
    spinner.textContent = 'thinking…';
    chipsEl.appendChild(spinner);
  }

  bannerEl.textContent = state.errorBanner ?? '';
  bannerEl.style.display = state.errorBanner ? 'block' : 'none';
}

async function onSendAsOther(): Promise<void> {
  const text = inputEl.value;
  const before = state;
  state = sendAsOther(state, text);
  if (state === before) return;
  inputEl.value = '';
  render();
  const id = state.requestId;
  try {
    const resp = await fetchSuggestions(state.transcript);
    state = applySuggestions(state, id, resp.suggestions);
  } catch (err) {
    state = applyFetchError(state, id, err instanceof Error ? err.message : 'request failed');
  }
  render();
}

function onSendAsMe(): void {
  const before = state;
  state = sendAsMe(state, inputEl.value);
  if (state === before) return;
  inputEl.value = '';
  render();
}

sendOtherBtn.addEventListener('click', () => void onSendAsOther());
sendMeBtn.addEventListener('click', onSendAsMe);
inputEl.addEventListener('keydown', (ev) => {
  if (ev.key === 'Enter' && !ev.shiftKey) {
    ev.preventDefault();
    void onSendAsOther();
  }
});

void fetchHealth()
  .then((h) => {
    statusEl.textContent = `ready · ${h.response_set_size} responses`;
  })
  .catch(() => {
    statusEl.textContent = 'service unavailable';
  });

render();
