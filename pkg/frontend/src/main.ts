/** DOM bootstrap: participant picker, overview panels, message form. */

import { ApiClient, ApiError } from "./api.js";
import {
  initialFormState,
  renderMessageForm,
  submitMessage,
  withCategory,
  withText,
  type MessageFormState,
} from "./message-form.js";
import { renderNotFound, renderOverview } from "./overview.js";
import type { MessageCategory } from "./types.js";

const api = new ApiClient(
  new URLSearchParams(location.search).get("api") ?? "",
);

let formState: MessageFormState | null = null;

async function loadParticipant(participantId: string): Promise<void> {
  const overviewEl = document.getElementById("overview")!;
  const formEl = document.getElementById("form")!;
  try {
    const [report, context, goals, messages] = await Promise.all([
      api.report(participantId),
      api.contextWindows(participantId),
      api.goals(participantId),
      api.messages(participantId),
    ]);
    overviewEl.innerHTML = renderOverview(report, context, goals);
    formState = initialFormState(participantId, messages);
    drawForm();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      overviewEl.innerHTML = renderNotFound(participantId);
      formEl.innerHTML = "";
    } else {
      overviewEl.innerHTML = `<section class="panel error"><p>${String(err)}</p></section>`;
    }
  }
}

function drawForm(): void {
  if (!formState) return;
  const formEl = document.getElementById("form")!;
  formEl.innerHTML = renderMessageForm(formState);
  const form = formEl.querySelector("form")!;
  const textarea = form.querySelector("textarea")!;
  const select = form.querySelector("select")!;
  textarea.addEventListener("input", () => {
    formState = withText(formState!, textarea.value);
    const button = form.querySelector("button")!;
    button.disabled = textarea.value.trim().length === 0;
  });
  select.addEventListener("change", () => {
    formState = withCategory(formState!, select.value as MessageCategory);
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    formState = withText(formState!, textarea.value);
    void submitMessage(formState, api).then((next) => {
      formState = next;
      drawForm();
    });
  });
}

function boot(): void {
  const picker = document.getElementById("participant") as HTMLInputElement;
  const go = document.getElementById("load")!;
  go.addEventListener("click", () => void loadParticipant(picker.value.trim()));
  picker.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void loadParticipant(picker.value.trim());
  });
}

boot();
