/** Thin typed wrapper over the suggestion service endpoints. */

import { ChatTurn, SuggestResponse } from './types.js';

export async function fetchSuggestions(transcript: ChatTurn[]): Promise<SuggestResponse> {
  const resp = await fetch('/api/suggest', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      conversation: transcript.map((t) => ({ sender: t.sender, text: t.text })),
    }),
  });
  if (!resp.ok) {
    let detail = `service error (${resp.status})`;
    try {
      const body = await resp.json();
      if (body && typeof body.error === 'string') detail = body.error;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new Error(detail);
  }
  return (await resp.json()) as SuggestResponse;
}

export async function fetchHealth(): Promise<{ status: string; response_set_size: number }> {
  const resp = await fetch('/api/health');
  if (!resp.ok) throw new Error(`health check failed (${resp.status})`);
  return (await resp.json()) as { status: string; response_set_size: number };
}
